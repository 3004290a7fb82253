// Command-line front end: data generation, training, evaluation, rollout and
// report emission.  Every command resolves its configuration (preset defaults
// + optional --config JSON + flag overrides), validates it, writes the
// resolved document next to its outputs, and exits 0 on success, 1 on
// validation errors, 2 on numerical divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include <CLI11.hpp>

#include "tcrom/checkpoint.hpp"
#include "tcrom/couette.hpp"
#include "tcrom/csv.hpp"
#include "tcrom/pod.hpp"
#include "tcrom/report.hpp"
#include "tcrom/sae.hpp"
#include "tcrom/spnn.hpp"
#include "tcrom/synthetic.hpp"
#include "tcrom/trajectory.hpp"
#include "tcrom/uc.hpp"

namespace fs = std::filesystem;
using namespace tcrom;

namespace {

// ---------------------------------------------------------------------------
// Configuration: preset defaults, JSON overlay, flag overrides.
// ---------------------------------------------------------------------------

json couette_preset() {
  return {
      {"preset", "couette"},
      {"seed", 0},
      {"split_seed", 42},
      {"train_fraction", 0.8},
      {"data",
       {{"kind", "couette"},
        {"nodes", 100},
        {"height", 1.0},
        {"dumbbells", 10000},
        {"weissenberg", 1.0},
        {"reynolds", 0.1},
        {"viscosity_ratio", 0.9},
        {"lid_velocity", 1.0},
        {"horizon", 1.0},
        {"dt", 1.0 / 150.0},
        {"micro_substeps", 4},
        {"normalize", false}}},
      {"sae",
       {{"per_block", false},
        {"bottleneck", 10},
        {"hidden", {160, 160}},
        {"lr", 1e-4},
        {"lambda_r", 1e-4},
        {"epochs", 15000},
        {"patience", 2000},
        {"min_improve", 1e-9},
        {"active_threshold", 0.01},
        {"blocks", json::array()}}},
      {"spnn",
       {{"hidden_layers", 5},
        {"width", 24},
        {"lr", 1e-4},
        {"lambda_d", 1e3},
        {"lambda_r", 1e-5},
        {"epochs", 30000},
        {"patience", 3000},
        {"min_improve", 1e-10}}},
      {"uc",
       {{"hidden_layers", 5},
        {"width", 25},
        {"lr", 1e-4},
        {"lambda_r", 1e-5},
        {"epochs", 30000},
        {"patience", 3000},
        {"min_improve", 1e-10},
        {"residual", false}}},
      {"csv", {{"layout", ""}, {"nodes", 0}, {"dt", 1.0}}}};
}

json tire_like_preset() {
  json cfg = couette_preset();
  cfg["preset"] = "tire-like";
  cfg["data"] = {{"kind", "synthetic"}, {"nodes", 50},     {"n_snapshots", 200},
                 {"dt", 0.005},         {"q_width", 3},    {"v_width", 3},
                 {"s_width", 6},        {"normalize", true}};
  cfg["sae"]["per_block"] = true;
  cfg["sae"]["lambda_r"] = 1e-3;
  cfg["sae"]["epochs"] = 12000;
  cfg["sae"]["blocks"] = json::array({
      {{"name", "q"}, {"bottleneck", 10}, {"hidden", {40, 40}}},
      {{"name", "v"}, {"bottleneck", 10}, {"hidden", {40, 40}}},
      {{"name", "sigma"}, {"bottleneck", 20}, {"hidden", {80, 80}}},
  });
  cfg["spnn"]["width"] = 0;  // 22 * d
  cfg["spnn"]["lambda_r"] = 1e-4;
  cfg["spnn"]["epochs"] = 20000;
  cfg["uc"]["width"] = 0;  // 5 * d
  cfg["uc"]["epochs"] = 20000;
  return cfg;
}

json preset_config(const std::string& name) {
  if (name == "couette") return couette_preset();
  if (name == "tire-like") return tire_like_preset();
  throw ValidationError("unknown preset '" + name + "' (couette, tire-like)");
}

/// Overlay user JSON on defaults, rejecting keys the schema does not know.
void merge_config(json& base, const json& user, const std::string& path) {
  if (!user.is_object())
    throw ValidationError("config: expected an object at " + (path.empty() ? "top level" : path));
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ValidationError("config: unknown key '" + here + "'");
    if (base[key].is_object() && !base[key].empty() && value.is_object()) {
      merge_config(base[key], value, here);
    } else {
      base[key] = value;
    }
  }
}

struct CommonOpts {
  std::string preset = "couette";
  std::string config_path;
  std::string out;
  long seed = -1;  // -1 = keep preset value
  long epochs = -1;
  double lr = -1, lambda_r = -1, lambda_d = -1;
};

json resolve_config(const CommonOpts& opts, const std::string& model_section) {
  json cfg = preset_config(opts.preset);
  if (!opts.config_path.empty()) {
    std::ifstream is(opts.config_path);
    if (!is) throw ValidationError("cannot open config '" + opts.config_path + "'");
    json user = json::parse(is, nullptr, false);
    if (user.is_discarded())
      throw ValidationError("config '" + opts.config_path + "' is not valid JSON");
    merge_config(cfg, user, "");
  }
  if (opts.seed >= 0) cfg["seed"] = opts.seed;
  if (!model_section.empty()) {
    if (opts.epochs >= 0) cfg[model_section]["epochs"] = opts.epochs;
    if (opts.lr >= 0) cfg[model_section]["lr"] = opts.lr;
    if (opts.lambda_r >= 0) cfg[model_section]["lambda_r"] = opts.lambda_r;
    if (opts.lambda_d >= 0) {
      if (model_section != "spnn")
        throw ValidationError("--lambda-d only applies to train-spnn");
      cfg[model_section]["lambda_d"] = opts.lambda_d;
    }
  } else if (opts.epochs >= 0 || opts.lr >= 0 || opts.lambda_r >= 0 || opts.lambda_d >= 0) {
    throw ValidationError("training overrides are not valid for this command");
  }
  return cfg;
}

void write_resolved(const json& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "config.resolved.json");
  if (!os) throw ValidationError("cannot write resolved config in '" + out_dir + "'");
  os << cfg.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Shared pieces.
// ---------------------------------------------------------------------------

Trajectory generate_data(const json& cfg) {
  const json& d = cfg.at("data");
  const std::string kind = d.at("kind").get<std::string>();
  Trajectory t;
  if (kind == "couette") {
    CouetteParams p;
    p.nodes = d.at("nodes").get<int>();
    p.height = d.at("height").get<double>();
    p.dumbbells = d.at("dumbbells").get<int>();
    p.weissenberg = d.at("weissenberg").get<double>();
    p.reynolds = d.at("reynolds").get<double>();
    p.viscosity_ratio = d.at("viscosity_ratio").get<double>();
    p.lid_velocity = d.at("lid_velocity").get<double>();
    p.horizon = d.at("horizon").get<double>();
    p.dt = d.at("dt").get<double>();
    p.micro_substeps = d.at("micro_substeps").get<int>();
    p.seed = cfg.at("seed").get<std::uint64_t>();
    t = generate_couette(p);
  } else if (kind == "synthetic") {
    SyntheticParams p;
    p.nodes = d.at("nodes").get<int>();
    p.n_snapshots = d.at("n_snapshots").get<int>();
    p.dt = d.at("dt").get<double>();
    p.q_width = d.at("q_width").get<int>();
    p.v_width = d.at("v_width").get<int>();
    p.s_width = d.at("s_width").get<int>();
    p.seed = cfg.at("seed").get<std::uint64_t>();
    t = make_synthetic(p);
  } else {
    throw ValidationError("data.kind must be 'couette' or 'synthetic'");
  }
  if (d.value("normalize", false)) normalize(t);
  return t;
}

Trajectory load_data(const std::string& path, const json& cfg) {
  const json& c = cfg.at("csv");
  std::vector<LayoutEntry> layout;
  const std::string spec = c.value("layout", std::string());
  if (!spec.empty()) layout = parse_layout(spec);
  Trajectory t =
      ingest_external(path, layout, c.value("nodes", 0), c.value("dt", 1.0));
  // External CSV data arrives raw; bring it to training scale.
  std::ifstream probe(path, std::ios::binary);
  if (probe.peek() != '{' && !t.norm.active()) normalize(t);
  return t;
}

SaeConfig sae_config_from(const json& s, const json& blk, std::uint64_t seed,
                          std::uint64_t index) {
  SaeConfig c;
  c.bottleneck = blk.value("bottleneck", s.at("bottleneck").get<int>());
  c.hidden = blk.value("hidden", s.at("hidden").get<std::vector<int>>());
  c.lr = blk.value("lr", s.at("lr").get<double>());
  c.lambda_r = blk.value("lambda_r", s.at("lambda_r").get<double>());
  c.epochs = blk.value("epochs", s.at("epochs").get<long>());
  c.patience = blk.value("patience", s.at("patience").get<long>());
  c.min_improve = blk.value("min_improve", s.at("min_improve").get<double>());
  c.active_threshold = blk.value("active_threshold", s.at("active_threshold").get<double>());
  c.seed = seed + index;
  return c;
}

/// Train the whole-state model or one model per block, per config.
SaeSet train_sae_set(const Trajectory& t, const SplitIndex& idx, const json& cfg,
                     std::vector<std::vector<std::array<double, 4>>>& histories) {
  const json& s = cfg.at("sae");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  SaeSet set;
  set.per_block = s.at("per_block").get<bool>();
  if (!set.per_block) {
    SaeTrainResult r = train_sae(t, idx, sae_config_from(s, json::object(), seed, 0));
    histories.push_back(std::move(r.history));
    set.models.push_back(std::move(r.model));
    return set;
  }
  const json& blocks = s.at("blocks");
  if (blocks.size() != t.blocks.size())
    throw ValidationError("config sae.blocks has " + std::to_string(blocks.size()) +
                          " entries but the data has " + std::to_string(t.blocks.size()) +
                          " blocks");
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    if (blocks[b].value("name", t.blocks[b].name) != t.blocks[b].name)
      throw ValidationError("config sae.blocks[" + std::to_string(b) +
                            "] name does not match data block '" + t.blocks[b].name + "'");
    // View the block as its own trajectory for training.
    Trajectory sub;
    sub.dt = t.dt;
    sub.seed = t.seed;
    sub.nodes = t.nodes;
    sub.blocks = {t.blocks[b]};
    sub.snapshots = Matrix(t.n_snapshots(), t.blocks[b].width);
    const int off = t.block_offset(b);
    for (int i = 0; i < t.n_snapshots(); ++i)
      std::memcpy(sub.snapshots.row_ptr(i), t.snapshots.row_ptr(i) + off,
                  sizeof(double) * t.blocks[b].width);
    SaeTrainResult r = train_sae(sub, idx, sae_config_from(s, blocks[b], seed, b));
    histories.push_back(std::move(r.history));
    set.models.push_back(std::move(r.model));
  }
  return set;
}

std::vector<int> active_dims(const SaeSet& set) {
  std::vector<int> dims;
  for (const SaeModel& m : set.models) dims.push_back(m.n_active());
  return dims;
}

SplitIndex snapshot_split(const Trajectory& t, const json& cfg) {
  return split(t.n_snapshots(), cfg.at("train_fraction").get<double>(),
               cfg.at("split_seed").get<std::uint64_t>());
}

SplitIndex transition_split(const Trajectory& t, const json& cfg) {
  return split(t.n_snapshots() - 1, cfg.at("train_fraction").get<double>(),
               cfg.at("split_seed").get<std::uint64_t>());
}

Matrix encode_trajectory(const SaeSet& set, const Trajectory& t) {
  return encode_active(set, t, transpose(t.snapshots));
}

void print_active(const SaeSet& set) {
  std::cout << "active latents:";
  for (const SaeModel& m : set.models)
    std::cout << " " << m.n_active() << "/" << m.bottleneck();
  std::cout << "\n";
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

int cmd_gen_data(const CommonOpts& opts) {
  const json cfg = resolve_config(opts, "");
  const Trajectory t = generate_data(cfg);
  write_resolved(cfg, opts.out);
  write_trajectory((fs::path(opts.out) / "dataset.traj").string(), t);
  std::cout << "dataset: D=" << t.dim() << " N_T=" << t.n_snapshots() << " dt=" << t.dt
            << "\n";
  return 0;
}

int cmd_train_sae(const CommonOpts& opts, const std::string& data_path) {
  const json cfg = resolve_config(opts, "sae");
  const Trajectory t = load_data(data_path, cfg);
  const SplitIndex idx = snapshot_split(t, cfg);
  std::vector<std::vector<std::array<double, 4>>> histories;
  const SaeSet set = train_sae_set(t, idx, cfg, histories);
  write_resolved(cfg, opts.out);
  save_sae((fs::path(opts.out) / "sae.ckpt").string(), set);
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const std::string name =
        histories.size() == 1 ? "sae_history.csv"
                              : "sae_history_" + t.blocks[i].name + ".csv";
    write_history((fs::path(opts.out) / name).string(),
                  {"epoch", "total", "reconstruction", "sparsity"}, histories[i]);
  }
  print_active(set);
  return 0;
}

int cmd_eval_sae(const CommonOpts& opts, const std::string& data_path,
                 const std::string& sae_path) {
  const json cfg = resolve_config(opts, "");
  const Trajectory t = load_data(data_path, cfg);
  const SaeSet set = load_sae(sae_path);
  const SplitIndex idx = snapshot_split(t, cfg);
  const auto mse = test_sae(set, t, idx.test);
  write_resolved(cfg, opts.out);
  write_mse_column((fs::path(opts.out) / "sae_eval.csv").string(), "MSE_SAE", mse);
  json active;
  active["per_block"] = set.per_block;
  active["dims"] = active_dims(set);
  active["masks"] = json::array();
  for (const SaeModel& m : set.models)
    active["masks"].push_back(std::vector<int>(m.active.begin(), m.active.end()));
  std::ofstream os(fs::path(opts.out) / "active.json");
  os << active.dump(2) << '\n';
  print_active(set);
  for (const auto& [name, v] : mse) std::cout << name << " " << fmt_double(v) << "\n";
  return 0;
}

int cmd_pod(const CommonOpts& opts, const std::string& data_path, const std::string& sae_path,
            int dim_flag) {
  const json cfg = resolve_config(opts, "");
  const Trajectory t = load_data(data_path, cfg);
  const SplitIndex idx = snapshot_split(t, cfg);

  PodSet set;
  if (!sae_path.empty()) {
    const SaeSet sae = load_sae(sae_path);
    set = pod_fit_trajectory(t, idx.train, active_dims(sae), sae.per_block);
  } else if (dim_flag > 0) {
    set = pod_fit_trajectory(t, idx.train, {dim_flag}, false);
  } else {
    throw ValidationError("pod: give --sae (use learned dimension) or --dim");
  }
  write_resolved(cfg, opts.out);
  save_pod((fs::path(opts.out) / "pod.ckpt").string(), set);
  const auto mse = pod_eval(set, t, idx.test);
  write_mse_column((fs::path(opts.out) / "pod_eval.csv").string(), "MSE_POD", mse);
  for (const auto& [name, v] : mse) std::cout << name << " " << fmt_double(v) << "\n";
  return 0;
}

int cmd_train_spnn(const CommonOpts& opts, const std::string& data_path,
                   const std::string& sae_path) {
  const json cfg = resolve_config(opts, "spnn");
  const Trajectory t = load_data(data_path, cfg);
  const SaeSet sae = load_sae(sae_path);
  const Matrix codes = encode_trajectory(sae, t);
  const SplitIndex idx = transition_split(t, cfg);

  const json& s = cfg.at("spnn");
  SpnnConfig c;
  c.hidden_layers = s.at("hidden_layers").get<int>();
  c.width = s.at("width").get<int>();
  c.lr = s.at("lr").get<double>();
  c.lambda_d = s.at("lambda_d").get<double>();
  c.lambda_r = s.at("lambda_r").get<double>();
  c.epochs = s.at("epochs").get<long>();
  c.patience = s.at("patience").get<long>();
  c.min_improve = s.at("min_improve").get<double>();
  c.seed = cfg.at("seed").get<std::uint64_t>();

  SpnnTrainResult r = train_spnn(codes, t.dt, idx, c);
  write_resolved(cfg, opts.out);
  save_spnn((fs::path(opts.out) / "spnn.ckpt").string(), r.model);
  write_history((fs::path(opts.out) / "spnn_history.csv").string(),
                {"epoch", "total", "data", "degeneracy"}, r.history);
  std::cout << "spnn: d=" << r.model.dim << " params=" << r.model.net.parameter_count()
            << " epochs=" << r.history.size() << "\n";
  return 0;
}

int cmd_train_uc(const CommonOpts& opts, const std::string& data_path,
                 const std::string& sae_path) {
  const json cfg = resolve_config(opts, "uc");
  const Trajectory t = load_data(data_path, cfg);
  const SaeSet sae = load_sae(sae_path);
  const Matrix codes = encode_trajectory(sae, t);
  const SplitIndex idx = transition_split(t, cfg);

  const json& s = cfg.at("uc");
  UcConfig c;
  c.hidden_layers = s.at("hidden_layers").get<int>();
  c.width = s.at("width").get<int>();
  c.lr = s.at("lr").get<double>();
  c.lambda_r = s.at("lambda_r").get<double>();
  c.epochs = s.at("epochs").get<long>();
  c.patience = s.at("patience").get<long>();
  c.min_improve = s.at("min_improve").get<double>();
  c.residual = s.at("residual").get<bool>();
  c.seed = cfg.at("seed").get<std::uint64_t>();

  UcTrainResult r = train_uc(codes, t.dt, idx, c);
  write_resolved(cfg, opts.out);
  save_uc((fs::path(opts.out) / "uc.ckpt").string(), r.model);
  write_history((fs::path(opts.out) / "uc_history.csv").string(), {"epoch", "total", "data"},
                r.history);
  std::cout << "uc: d=" << r.model.dim << " params=" << r.model.net.parameter_count()
            << " epochs=" << r.history.size() << "\n";
  return 0;
}

int cmd_rollout(const CommonOpts& opts, const std::string& data_path,
                const std::string& sae_path, const std::string& model_path) {
  const json cfg = resolve_config(opts, "");
  const Trajectory t = load_data(data_path, cfg);
  const SaeSet sae = load_sae(sae_path);

  RolloutReport rep;
  const std::string kind = checkpoint_kind(model_path);
  if (kind == "spnn") {
    rep = rollout_spnn(sae, load_spnn(model_path), t);
  } else if (kind == "uc") {
    rep = rollout_uc(sae, load_uc(model_path), t);
  } else {
    throw ValidationError("rollout: '" + model_path + "' is a '" + kind +
                          "' checkpoint, expected spnn or uc");
  }
  write_resolved(cfg, opts.out);
  write_rollout_csv((fs::path(opts.out) / "rollout.csv").string(), rep);
  CsvWriter mse((fs::path(opts.out) / "rollout_mse.csv").string());
  mse.header({"variable", "MSE"});
  for (const auto& [name, v] : rep.mse) mse.row(name, {v});

  Trajectory decoded = t;
  decoded.snapshots = rep.decoded;
  write_trajectory((fs::path(opts.out) / "decoded.traj").string(), decoded);
  for (const auto& [name, v] : rep.mse) std::cout << name << " " << fmt_double(v) << "\n";
  return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& data_path,
               const std::string& sae_path, const std::string& pod_path,
               const std::string& spnn_path, const std::string& uc_path) {
  const json cfg = resolve_config(opts, "");
  const Trajectory t = load_data(data_path, cfg);
  const SaeSet sae = load_sae(sae_path);
  const SplitIndex idx = snapshot_split(t, cfg);
  write_resolved(cfg, opts.out);

  // Table 1: autoencoder vs linear baseline on test snapshots.
  const PodSet pod = load_pod(pod_path);
  write_mse_table((fs::path(opts.out) / "table1.csv").string(), "MSE_SAE", "MSE_POD",
                  test_sae(sae, t, idx.test), pod_eval(pod, t, idx.test));

  // Table 2: structure-preserving vs unconstrained rollout over all snapshots.
  const SpnnModel spnn = load_spnn(spnn_path);
  const UcModel uc = load_uc(uc_path);
  const RolloutReport rs = rollout_spnn(sae, spnn, t);
  const RolloutReport ru = rollout_uc(sae, uc, t);
  write_mse_table((fs::path(opts.out) / "table2.csv").string(), "MSE_SPNN", "MSE_UC", rs.mse,
                  ru.mse);

  // Figure data: latent paths, thermodynamic rates, nodal traces.
  const Matrix encoded = transpose(encode_trajectory(sae, t));
  write_latent_paths((fs::path(opts.out) / "fig3_top.csv").string(), t.dt, encoded,
                     rs.latent);
  write_thermo_rates((fs::path(opts.out) / "fig3_bottom.csv").string(), rs);
  std::vector<int> nodes;
  {
    int w = t.blocks[0].width;
    for (const Block& b : t.blocks) w = std::min(w, b.width);
    for (int f = 1; f <= 4; ++f) nodes.push_back(f * w / 5);
  }
  write_nodal_traces((fs::path(opts.out) / "fig4.csv").string(), t, rs.decoded, nodes);
  write_rollout_csv((fs::path(opts.out) / "rollout_spnn.csv").string(), rs);
  write_rollout_csv((fs::path(opts.out) / "rollout_uc.csv").string(), ru);
  std::cout << "report written to " << opts.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermodynamically consistent reduced-order models"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_path, sae_path, model_path, pod_path, spnn_path, uc_path;
  int dim_flag = 0;

  auto add_common = [&](CLI::App* cmd, bool trains) {
    cmd->add_option("--preset", opts.preset, "configuration preset (couette, tire-like)");
    cmd->add_option("--config", opts.config_path, "JSON config overlay");
    cmd->add_option("--seed", opts.seed, "master seed");
    cmd->add_option("--out", opts.out, "output directory")->required();
    if (trains) {
      cmd->add_option("--epochs", opts.epochs, "training epochs override");
      cmd->add_option("--lr", opts.lr, "learning rate override");
      cmd->add_option("--lambda-r", opts.lambda_r, "regularization weight override");
      cmd->add_option("--lambda-d", opts.lambda_d, "data-term weight override");
    }
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a ground-truth trajectory");
  add_common(gen, false);

  CLI::App* tsae = app.add_subcommand("train-sae", "train the sparse autoencoder");
  add_common(tsae, true);
  tsae->add_option("--data", data_path, "trajectory file")->required();

  CLI::App* esae = app.add_subcommand("eval-sae", "evaluate autoencoder test error");
  add_common(esae, false);
  esae->add_option("--data", data_path, "trajectory file")->required();
  esae->add_option("--sae", sae_path, "autoencoder checkpoint")->required();

  CLI::App* cpod = app.add_subcommand("pod", "fit and evaluate the linear baseline");
  add_common(cpod, false);
  cpod->add_option("--data", data_path, "trajectory file")->required();
  cpod->add_option("--sae", sae_path, "autoencoder checkpoint (for the learned dimension)");
  cpod->add_option("--dim", dim_flag, "explicit mode count");

  CLI::App* tspnn = app.add_subcommand("train-spnn", "train the structure-preserving model");
  add_common(tspnn, true);
  tspnn->add_option("--data", data_path, "trajectory file")->required();
  tspnn->add_option("--sae", sae_path, "autoencoder checkpoint")->required();

  CLI::App* tuc = app.add_subcommand("train-uc", "train the unconstrained baseline");
  add_common(tuc, true);
  tuc->add_option("--data", data_path, "trajectory file")->required();
  tuc->add_option("--sae", sae_path, "autoencoder checkpoint")->required();

  CLI::App* roll = app.add_subcommand("rollout", "integrate latent dynamics and decode");
  add_common(roll, false);
  roll->add_option("--data", data_path, "trajectory file")->required();
  roll->add_option("--sae", sae_path, "autoencoder checkpoint")->required();
  roll->add_option("--model", model_path, "dynamics checkpoint (spnn or uc)")->required();

  CLI::App* rep = app.add_subcommand("report", "emit comparison tables and figure data");
  add_common(rep, false);
  rep->add_option("--data", data_path, "trajectory file")->required();
  rep->add_option("--sae", sae_path, "autoencoder checkpoint")->required();
  rep->add_option("--pod", pod_path, "linear-baseline checkpoint")->required();
  rep->add_option("--spnn", spnn_path, "structure-preserving checkpoint")->required();
  rep->add_option("--uc", uc_path, "unconstrained checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (tsae->parsed()) return cmd_train_sae(opts, data_path);
    if (esae->parsed()) return cmd_eval_sae(opts, data_path, sae_path);
    if (cpod->parsed()) return cmd_pod(opts, data_path, sae_path, dim_flag);
    if (tspnn->parsed()) return cmd_train_spnn(opts, data_path, sae_path);
    if (tuc->parsed()) return cmd_train_uc(opts, data_path, sae_path);
    if (roll->parsed()) return cmd_rollout(opts, data_path, sae_path, model_path);
    if (rep->parsed())
      return cmd_report(opts, data_path, sae_path, pod_path, spnn_path, uc_path);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
