// Acceptance checks: one PASS/FAIL line per criterion. Runs the full default
// pipeline twice (for the determinism criterion) unless --reuse is given and
// both run directories already exist.

#include <Eigen/Dense>

#include <chrono>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "frfnet/errors.hpp"
#include "frfnet/fft.hpp"
#include "frfnet/hashing.hpp"
#include "frfnet/pipeline.hpp"
#include "frfnet/seeds.hpp"
#include "frfnet/signal_lab.hpp"

using namespace frfnet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) a(i, j) = a(j, i) = u(rng);
  return a;
}

// ---------------------------------------------------------------- 1

double fd_relative_error(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  MlpNetwork<long double> ld;
  for (const auto& l : net.layers)
    ld.layers.push_back({l.weights.cast<long double>(), l.bias.cast<long double>(), l.activation});
  const VectorX<long double> xl = x.cast<long double>(), dl = d.cast<long double>();
  const long double h = 1e-6L;
  auto energy = [&] { return 0.5L * (predict(ld, xl) - dl).squaredNorm(); };
  auto fd = [&](long double& w) {
    const long double saved = w;
    w = saved + h;
    const long double ep = energy();
    w = saved - h;
    const long double em = energy();
    w = saved;
    return static_cast<double>(-(ep - em) / (2 * h));
  };
  const auto g = backward(net, forward(net, x), d, 1.0);
  double diff = 0, norm = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (Eigen::Index c = 0; c < ld.layers[l].weights.cols(); ++c)
      for (Eigen::Index r = 0; r < ld.layers[l].weights.rows(); ++r) {
        const double v = fd(ld.layers[l].weights(r, c));
        diff += std::pow(g.weights[l](r, c) - v, 2);
        norm += v * v;
      }
    for (Eigen::Index r = 0; r < ld.layers[l].bias.size(); ++r) {
      const double v = fd(ld.layers[l].bias(r));
      diff += std::pow(g.bias[l](r) - v, 2);
      norm += v * v;
    }
  }
  return std::sqrt(diff / norm);
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::vector<Eigen::Index>> shapes{{100, 30, 34}, {100, 30, 1}, {4, 6, 3}, {2, 4, 1}, {8, 5, 5, 2}};
  double worst = 0;
  int n = 0;
  for (int i = 0; i < 20; ++i) {
    const auto& shape = shapes[static_cast<std::size_t>(i) % shapes.size()];
    std::vector<Activation> acts(shape.size() - 1, Activation::sigmoid);
    if (i % 2) acts.back() = Activation::linear;
    const auto net = make_network<double>(shape, acts, 500 + static_cast<std::uint64_t>(i), i % 3 ? 1.0 : 0.0);
    Eigen::VectorXd x(shape.front()), d(shape.back());
    for (auto& v : x) v = 2 * u(rng);
    for (auto& v : d) v = u(rng);
    worst = std::max(worst, fd_relative_error(net, x, d));
    ++n;
  }
  const double t = seconds_since(t0);
  return {n >= 20 && worst < 1e-6 && t < 30,
          std::to_string(n) + " networks incl. 100-30-34, max rel err " + fmt(worst) + " (< 1e-6), " + fmt(t) +
              " s (< 30 s)"};
}

// ---------------------------------------------------------------- 2

Outcome criterion_eigen_pca() {
  std::mt19937_64 rng(7);
  double poly = 0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd a = random_symmetric(2, rng);
    const double tr = a.trace(), disc = std::sqrt(tr * tr / 4 - a.determinant());
    const auto e = eig_sym(a);
    poly = std::max({poly, std::abs(e.values(0) - (tr / 2 + disc)), std::abs(e.values(1) - (tr / 2 - disc))});
  }
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd m = random_symmetric(3, rng);
    const double b = -m.trace();
    const double c = m(0, 0) * m(1, 1) + m(0, 0) * m(2, 2) + m(1, 1) * m(2, 2) - m(0, 1) * m(0, 1) -
                     m(0, 2) * m(0, 2) - m(1, 2) * m(1, 2);
    const double d = -m.determinant();
    const double p = c - b * b / 3, q = 2 * b * b * b / 27 - b * c / 3 + d;
    const double r = 2 * std::sqrt(-p / 3);
    const double phi = std::acos(std::clamp(3 * q / (p * r), -1.0, 1.0)) / 3;
    std::vector<double> roots;
    for (int j = 0; j < 3; ++j) roots.push_back(r * std::cos(phi - 2 * std::numbers::pi * j / 3) - b / 3);
    std::sort(roots.begin(), roots.end(), std::greater<>());
    const auto e = eig_sym(m);
    for (int j = 0; j < 3; ++j) poly = std::max(poly, std::abs(e.values(j) - roots[static_cast<std::size_t>(j)]));
  }

  double proj = 0, recon = 0;
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto [rows, cols] : {std::pair<int, int>{40, 12}, {10, 60}}) {
    Eigen::MatrixXd x(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) x(i, j) = g(rng) * (1 + j);
    const auto keep = fit_channel_pca(x, 5);
    const Eigen::MatrixXd brute = (x.rowwise() - keep.mean.transpose()) * keep.components;
    for (int i = 0; i < rows; ++i)
      proj = std::max(proj, (project_channel(keep, x.row(i).transpose()) - brute.row(i).transpose()).cwiseAbs().maxCoeff());
    const auto full = fit_channel_pca(x, std::min(rows, cols));
    const Eigen::MatrixXd centered = x.rowwise() - full.mean.transpose();
    recon = std::max(recon, (centered * full.components * full.components.transpose() - centered).cwiseAbs().maxCoeff());
  }
  return {poly < 1e-9 && proj < 1e-10 && recon < 1e-9,
          "char-poly max err " + fmt(poly) + " (< 1e-9), projection " + fmt(proj) + " (< 1e-10), reconstruction " +
              fmt(recon) + " (< 1e-9)"};
}

// ---------------------------------------------------------------- 3

FrfMatrix single_dof(const FrequencyGrid& grid, Eigen::Index res_bin) {
  const double m = 1.0, zeta = 0.01;
  const double wn = 2 * std::numbers::pi * grid.df() * static_cast<double>(res_bin);
  const double k = m * wn * wn;
  FrfMatrix frf;
  frf.freq_bins = grid.frequencies();
  frf.channel_kinds = {ChannelKind::accelerance};
  frf.values.resize(1, grid.n_bins);
  for (Eigen::Index b = 0; b < grid.n_bins; ++b) {
    const double w = 2 * std::numbers::pi * frf.freq_bins(b);
    frf.values(0, b) = 1.0 / std::complex<double>(k - m * w * w, 2 * zeta * std::sqrt(k * m) * w);
  }
  return frf;
}

Outcome criterion_frf_estimator() {
  const FrequencyGrid grid{1000.0, 2048};
  const Eigen::Index res = 200;
  const FrfMatrix truth = single_dof(grid, res);
  const auto clean = measure_frf(truth, ExcitationParams{1, 1.0, std::nullopt}, 3);
  double noiseless = 0;
  for (Eigen::Index b = 1; b < grid.n_bins; ++b)
    noiseless = std::max(noiseless, std::abs(clean.values(0, b) - truth.values(0, b)) / std::abs(truth.values(0, b)));
  double resonance = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto est = measure_frf(truth, ExcitationParams{10, 1.0, 20.0}, seed);
    resonance = std::max(resonance, std::abs(std::abs(est.values(0, res)) / std::abs(truth.values(0, res)) - 1));
  }
  return {noiseless < 1e-8 && resonance < 0.05,
          "noiseless max rel err " + fmt(noiseless) + " (< 1e-8), 10 records at 20 dB worst resonance error over 20 "
          "seeds " + fmt(100 * resonance) + "% (< 5%)"};
}

// ---------------------------------------------------------------- 4

// Seconds between two stamped events in run.log.
double stamped_seconds(const fs::path& log, const std::string& from, const std::string& to) {
  std::ifstream in(log);
  std::string line;
  std::optional<std::tm> a, b;
  while (std::getline(in, line)) {
    std::tm t{};
    std::istringstream s(line);
    s >> std::get_time(&t, "%Y-%m-%dT%H:%M:%SZ");
    const std::string rest = line.size() > 21 ? line.substr(21) : "";
    if (!a && rest.rfind(from, 0) == 0) a = t;
    if (rest.rfind(to, 0) == 0) b = t;
  }
  if (!a || !b) return -1;
  return std::difftime(timegm(&*b), timegm(&*a));
}

Outcome criterion_variance(const fs::path& run) {
  const PcaBasis accel = basis_from_container(read_container((run / "basis_accel.frfd").string(), "pca_basis"));
  const Dataset fp = fingerprints_from_container(read_container((run / "fingerprints.frfd").string(), "fingerprints"));
  double lo = 1, hi = 0;
  for (std::size_t c = 0; c < accel.channels.size(); ++c) {
    const double v = variance_explained(accel, c, 7).fraction;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double t = stamped_seconds(run / "run.log", "fit-pca: start", "fit-pca: basis");
  const bool length_ok = fp.features.cols() == 100 && accel.output_size() == 84;
  return {lo >= 0.99 && length_ok && t >= 0 && t < 120,
          "first 7 accelerance PCs explain " + fmt(100 * lo) + "-" + fmt(100 * hi) +
              "% per channel (>= 99%), fingerprint length " + std::to_string(fp.features.cols()) + " = " +
              std::to_string(accel.output_size()) + " + " + std::to_string(fp.features.cols() - accel.output_size()) +
              ", PCA fit " + fmt(t) + " s (< 120 s)"};
}

// ---------------------------------------------------------------- 5-7

Outcome criterion_localization(const nlohmann::json& summary, double runtime) {
  const auto& e = summary.at("evaluation");
  const double mis = e.at("misclassification_pct"), hit = e.at("localization_hit_rate");
  return {mis < 20 && hit >= 0.8 && runtime > 0 && runtime < 900,
          "misclassification " + fmt(mis) + "% (< 20%), hit rate " + fmt(100 * hit) + "% (>= 80%) over " +
              std::to_string(e.at("scenarios").get<int>()) + " test scenarios, reproduce " + fmt(runtime) +
              " s (< 900 s)"};
}

Outcome criterion_severity(const nlohmann::json& summary) {
  const auto& severity = summary.at("evaluation").at("severity");
  bool ok = severity.size() == 3;
  std::string detail;
  for (const auto& [kind, entry] : severity.items()) {
    const double err = entry.at("mean_rel_err_pct");
    ok = ok && err <= 35;
    detail += kind + " " + fmt(err) + "%, ";
  }
  const auto& sweep = summary.at("crack_sweep");
  const auto lengths = sweep.at("lengths_mm").get<std::vector<double>>();
  const auto predictions = sweep.at("predictions_mm").get<std::vector<double>>();
  const int up = non_decreasing_steps(predictions);
  const int steps = static_cast<int>(predictions.size()) - 1;
  ok = ok && steps == 5 && up >= 4;
  detail += "(each <= 35%); crack sweep non-decreasing in " + std::to_string(up) + "/" + std::to_string(steps) +
            " steps (>= 4/5):";
  for (std::size_t i = 0; i < predictions.size(); ++i) detail += " " + fmt(lengths[i]) + "->" + fmt(predictions[i]);
  return {ok, detail};
}

Outcome criterion_training(const fs::path& run) {
  TrainingSet<double> xor_set;
  xor_set.inputs.resize(4, 2);
  xor_set.inputs << 0, 0, 0, 1, 1, 0, 1, 1;
  xor_set.targets.resize(4, 1);
  xor_set.targets << 0, 1, 1, 0;
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainParams p;
    p.alpha = 0.5;
    p.max_epochs = 5000;
    p.target_mse = 0.01;
    p.shuffle_seed = seed;
    const auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, seed, 1.0);
    if (train(net, xor_set, p).history.back().mse < 0.01) ++solved;
  }
  const TaskModel loc = model_from_container(read_container((run / "model_localize.frfd").string(), "mlp_model"));
  return {solved >= 4 && loc.info.validation_mse < 0.05,
          "XOR solved for " + std::to_string(solved) + "/5 seeds (>= 4), localization validation MSE " +
              fmt(loc.info.validation_mse) + " (< 0.05)"};
}

// ---------------------------------------------------------------- 8

Outcome criterion_determinism(const fs::path& a, const fs::path& b, const RunConfig& config) {
  int compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name == "run.log") continue;
    ++compared;
    if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) ++differing;
  }

  const PanelModel panel = build_panel(config.panel);
  ScenarioRecord rec;
  rec.scenario = DamageScenario::single(DamageKind::hole_expansion, 12, 0.25);
  rec.seed = derive_seed(config.master_seed, SeedStage::probe, 900);
  const FrfMatrix frf = synthesize_frf(panel, rec, config.simulation);
  const fs::path tmp = a.parent_path() / "roundtrip.frfd";
  write_container(tmp.string(), to_container(frf));
  const FrfMatrix back = frf_from_container(read_container(tmp.string(), "frf_matrix"));
  const bool bitwise = back.values.size() == frf.values.size() &&
                       std::memcmp(back.values.data(), frf.values.data(),
                                   sizeof(std::complex<double>) * static_cast<std::size_t>(frf.values.size())) == 0 &&
                       encode_container(to_container(back)) == slurp(tmp);
  fs::remove(tmp);

  const TaskModel loc = model_from_container(read_container((a / "model_localize.frfd").string(), "mlp_model"));
  const BasisPair bases{basis_from_container(read_container((a / "basis_accel.frfd").string())),
                        basis_from_container(read_container((a / "basis_strain.frfd").string()))};
  FeatureVector foreign = project(frf, bases.accel, bases.strain);
  foreign.basis_id = sha256_hex("other fingerprint space").substr(0, 16);
  bool rejected = false;
  try {
    localize(foreign, loc);
  } catch (const ContractError&) {
    rejected = true;
  }
  return {compared > 0 && differing == 0 && bitwise && rejected,
          std::to_string(compared - differing) + "/" + std::to_string(compared) +
              " artifacts byte-identical across two reproduce runs, FRF container round trip " +
              (bitwise ? "bitwise" : "NOT bitwise") + ", basis mismatch " + (rejected ? "rejected" : "NOT rejected")};
}

// ---------------------------------------------------------------- 9

Outcome criterion_physics(const RunConfig& config) {
  const PanelModel panel = build_panel(config.panel);
  const auto full = modal_solve(panel, static_cast<int>(panel.n_dof));
  const Eigen::MatrixXd mp = panel.mass * full.mode_shapes;
  const Eigen::MatrixXd damping = mp * (2 * full.damping_ratio * full.omega()).asDiagonal() * mp.transpose();
  double recip = 0;
  for (double f : {45.0, 180.0, 410.0, 777.0}) {
    const double w = 2 * std::numbers::pi * f;
    const Eigen::MatrixXcd dyn = (panel.stiffness - w * w * panel.mass).cast<std::complex<double>>() +
                                 std::complex<double>(0, w) * damping.cast<std::complex<double>>();
    const Eigen::MatrixXcd h = dyn.inverse();
    recip = std::max(recip, (h - h.transpose()).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff());
    for (Index q = 0; q < panel.n_dof; q += 7)
      for (Index p = 0; p < panel.n_dof; p += 5)
        recip = std::max(recip, std::abs(receptance(full, q, p, w) - receptance(full, p, q, w)) /
                                    std::abs(receptance(full, q, p, w)));
  }

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  double parseval = 0;
  for (Eigen::Index n : {64, 1024, 4096}) {
    Eigen::VectorXd x(n);
    for (auto& v : x) v = g(rng);
    parseval = std::max(parseval, std::abs(x.squaredNorm() - fft_forward(x).squaredNorm() / double(n)) / x.squaredNorm());
  }

  int violations = 0, checks = 0;
  const int modes = panel.n_modes;
  auto sweep = [&](DamageKind kind, int rivet, const std::vector<double>& levels) {
    Eigen::VectorXd prev = modal_solve(panel, modes).natural_frequencies;
    for (double s : levels) {
      const Eigen::VectorXd f = modal_solve(apply_damage(panel, DamageScenario::single(kind, rivet, s)), modes).natural_frequencies;
      for (int i = 0; i < modes; ++i, ++checks) violations += f(i) > prev(i) * (1 + 1e-12);
      prev = f;
    }
  };
  sweep(DamageKind::crack, 7, {2.25, 4.5, 6.75, 9.0, 11.25, 13.5, 15.75, 18.0, 20.25, 22.5});
  sweep(DamageKind::added_mass, 3, {0.01, 0.02, 0.03, 0.04, 0.05, 0.1});
  return {recip < 1e-10 && parseval < 1e-10 && violations == 0,
          "reciprocity rel err " + fmt(recip) + " (< 1e-10), Parseval rel err " + fmt(parseval) + " (< 1e-10), " +
              std::to_string(violations) + "/" + std::to_string(checks) +
              " natural-frequency increases over crack and added-mass sweeps"};
}

double reproduce_into(RunConfig config, const fs::path& dir) {
  fs::remove_all(dir);
  config.output_dir = dir.string();
  std::cerr << "acceptance: cmd_reproduce into " << dir << "\n";
  const auto t0 = Clock::now();
  cmd_reproduce(config, RunLog(Artifacts{config.output_dir}.log(), &std::cerr));
  return seconds_since(t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string config_path, work_dir = "acceptance";
  bool reuse = false;
  app.add_option("--config", config_path, "Run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--work-dir", work_dir, "Directory for the two reproduce runs");
  app.add_flag("--reuse", reuse, "Reuse existing run directories");
  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = load_run_config(config_path);
    const fs::path work = fs::absolute(work_dir), run_a = work / "run_a", run_b = work / "run_b";
    fs::create_directories(work);

    std::vector<Outcome> results(9);
    std::vector<std::string> titles{"gradient correctness",   "eigen/PCA oracle equivalence", "FRF estimator fidelity",
                                    "variance concentration", "localization",                 "severity",
                                    "training sanity",        "determinism and persistence",  "physics invariants"};
    results[0] = criterion_gradients();
    results[1] = criterion_eigen_pca();
    results[2] = criterion_frf_estimator();
    results[8] = criterion_physics(config);

    const bool have_runs = fs::exists(run_a / "summary.json") && fs::exists(run_b / "summary.json") &&
                           fs::exists(work / "runtime.txt");
    if (reuse && have_runs) {
      std::cerr << "acceptance: reusing " << run_a << " and " << run_b << "\n";
    } else {
      const double runtime = reproduce_into(config, run_a);
      reproduce_into(config, run_b);
      std::ofstream(work / "runtime.txt") << std::setprecision(17) << runtime << "\n";
    }
    double runtime = 0;
    std::ifstream(work / "runtime.txt") >> runtime;
    const nlohmann::json summary = nlohmann::json::parse(slurp(run_a / "summary.json"));
    results[3] = criterion_variance(run_a);
    results[4] = criterion_localization(summary, runtime);
    results[5] = criterion_severity(summary);
    results[6] = criterion_training(run_a);
    results[7] = criterion_determinism(run_a, run_b, config);

    int passed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      passed += results[i].pass;
      std::cout << "criterion " << i + 1 << ": " << (results[i].pass ? "PASS" : "FAIL") << "  " << titles[i] << ": "
                << results[i].detail << "\n";
    }
    std::cout << "acceptance: " << passed << "/9 criteria pass\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "acceptance: aborted: " << e.what() << "\n";
    return 1;
  }
}
