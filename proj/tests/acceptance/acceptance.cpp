// Acceptance gate. Runs ten checks against the built library and CLI and
// prints one PASS/FAIL line per check; exits nonzero when any check fails.
// argv[1] must be the path to the biaslens CLI binary.
#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <json.hpp>

#include "biaslens/audit.hpp"
#include "biaslens/clinical.hpp"
#include "biaslens/common.hpp"
#include "biaslens/dataset.hpp"
#include "biaslens/gmm.hpp"
#include "biaslens/intersect.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/pca.hpp"
#include "biaslens/slices.hpp"
#include "biaslens/stratify.hpp"
#include "biaslens/synth.hpp"
#include "support/oracles.hpp"

namespace {

std::string g_cli;

void expect(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TempDir {
  std::filesystem::path root;
  TempDir() {
    static std::atomic<int> counter{0};
    root = std::filesystem::temp_directory_path() /
           ("biaslens_acc_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(root);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(root, ec);
  }
  std::string path() const { return root.string(); }
  std::string file(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  expect(in.good(), "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

CmdResult run_cli(const std::string& args) {
  const std::string cmd = shell_quote(g_cli) + " " + args + " 2>&1";
  CmdResult result;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  expect(pipe != nullptr, "popen failed");
  char buf[4096];
  size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, got);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string first_line(const std::string& text) {
  const auto nl = text.find('\n');
  return nl == std::string::npos ? text : text.substr(0, nl);
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
  size_t count = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::map<std::string, std::string> dir_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_regular_file()) {
      out[entry.path().filename().string()] = slurp(entry.path().string());
    }
  }
  return out;
}

// 1. Best-to-worst gap statistics on the reference pair of group MREs.
std::string criterion_gap_stats() {
  const auto gs = biaslens::gap_stats(6.25, 7.57);
  expect(std::abs(gs.absolute_gap_pp - 1.32) <= 1e-12,
         "absolute gap " + fmt(gs.absolute_gap_pp, 17) + ", expected 1.32");
  expect(std::abs(gs.relative_variation_pct - 21.1) <= 0.5,
         "relative variation " + fmt(gs.relative_variation_pct, 6) +
             "%, expected 21.1 +/- 0.5pp");
  return "relative variation " + fmt(gs.relative_variation_pct, 6) + "% (target 21.1 +/- 0.5pp)";
}

// 2. Cluster-count selection on three well-separated 5D Gaussians.
std::string criterion_select_k() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n_per = 1000;
  const int d = 5;
  double min_ari = 1.0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    biaslens::Rng rng(seed);
    Eigen::MatrixXd X(3 * n_per, d);
    std::vector<int> truth(3 * n_per);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < n_per; ++i) {
        const int row = c * n_per + i;
        truth[row] = c;
        for (int j = 0; j < d; ++j) X(row, j) = (j == c ? 8.0 : 0.0) + rng.normal();
      }
    }
    biaslens::GmmOptions options;
    options.restarts = 5;
    options.seed = seed;
    const auto selection = biaslens::select_k(X, 2, 8, options);
    expect(selection.chosen_k == 3,
           "seed " + std::to_string(seed) + " chose k=" + std::to_string(selection.chosen_k));
    const auto assignment = biaslens::gmm_assign(selection.chosen().model, X);
    const double ari = biaslens::adjusted_rand_index(truth, assignment.labels);
    min_ari = std::min(min_ari, ari);
    expect(ari >= 0.99, "seed " + std::to_string(seed) + " ARI " + fmt(ari, 6) + " < 0.99");
  }
  const double secs = seconds_since(t0);
  expect(secs < 60.0, "took " + fmt(secs, 4) + "s, budget 60s");
  return "k=3 on all 10 seeds, min ARI " + fmt(min_ari, 6) + ", " + fmt(secs, 3) + "s (budget 60s)";
}

// 3. PCA recovers a planted low rank and reconstructs at full retention.
std::string criterion_pca() {
  biaslens::Rng rng(33);
  const int n = 500;
  const int d = 388;
  const int rank = 10;
  Eigen::MatrixXd A(n, rank);
  Eigen::MatrixXd B(rank, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < rank; ++j) A(i, j) = rng.normal();
  }
  for (int i = 0; i < rank; ++i) {
    for (int j = 0; j < d; ++j) B(i, j) = rng.normal();
  }
  Eigen::MatrixXd X = A * B;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) += 1e-6 * rng.normal();
  }

  const auto reduced = biaslens::fit_pca(X, 0.99, 128);
  expect(reduced.d_out <= 12, "kept " + std::to_string(reduced.d_out) + " > 12 components at 99%");
  const Eigen::MatrixXd gram =
      reduced.components * reduced.components.transpose() -
      Eigen::MatrixXd::Identity(reduced.d_out, reduced.d_out);
  const double ortho = gram.cwiseAbs().maxCoeff();
  expect(ortho <= 1e-8, "orthonormality defect " + fmt(ortho, 3) + " > 1e-8");

  const auto full = biaslens::fit_pca(X, 1.0, d);
  const Eigen::MatrixXd Z = biaslens::pca_transform(full, X);
  Eigen::MatrixXd reconstructed = Z * full.components;
  reconstructed.rowwise() += full.mean.transpose();
  const double err = (X - reconstructed).cwiseAbs().maxCoeff();
  expect(err < 1e-6, "full-retention reconstruction error " + fmt(err, 3) + " >= 1e-6");
  return "kept " + std::to_string(reduced.d_out) + "/388 dims at 99%, orthonormal to " +
         fmt(ortho, 3) + ", reconstruction error " + fmt(err, 3);
}

// 4. Mann-Whitney U and reported p agree with exact enumeration on small samples.
std::string criterion_mwu() {
  biaslens::Rng rng(424242);
  double max_p_gap = 0.0;
  for (int draw = 0; draw < 200; ++draw) {
    std::vector<double> a;
    std::vector<double> b;
    for (;;) {
      a.assign(1 + rng.index(8), 0.0);
      b.assign(1 + rng.index(8), 0.0);
      std::set<double> seen;
      for (auto& v : a) seen.insert(v = 100.0 * rng.uniform01());
      for (auto& v : b) seen.insert(v = 100.0 * rng.uniform01());
      if (seen.size() == a.size() + b.size()) break;
    }
    const auto got = biaslens::mann_whitney_u(a, b);
    const auto want = oracle::mwu_exact_enumeration(a, b);
    expect(got.u == want.u, "draw " + std::to_string(draw) + ": U " + fmt(got.u, 17) +
                                " != " + fmt(want.u, 17));
    max_p_gap = std::max(max_p_gap, std::abs(got.p - want.p));
    expect(std::abs(got.p - want.p) <= 0.05,
           "draw " + std::to_string(draw) + ": reported p " + fmt(got.p, 6) + " vs exact " +
               fmt(want.p, 6));
  }
  const std::vector<double> tied_a(4, 2.5);
  const std::vector<double> tied_b(5, 2.5);
  const auto tied = biaslens::mann_whitney_u(tied_a, tied_b);
  expect(tied.p == 1.0, "all-ties p " + fmt(tied.p, 17) + " != 1");
  expect(tied.u == 10.0, "all-ties U " + fmt(tied.u, 17) + " != 10");
  return "200 tie-free draws matched enumeration, max |p-exact| " + fmt(max_p_gap, 4) +
         " (bound 0.05), all-ties p=1";
}

// 5. Silhouette agrees with an independent brute-force evaluation.
std::string criterion_silhouette() {
  biaslens::Rng rng(5555);
  double max_diff = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 20 + rng.index(181);  // up to 200
    const int d = 2 + static_cast<int>(rng.index(4));
    const int k = 2 + static_cast<int>(rng.index(3));
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.index(static_cast<size_t>(k)));
    labels[0] = 0;
    labels[1] = 1;
    Eigen::MatrixXd X(static_cast<int>(n), d);
    std::vector<std::vector<double>> points(n, std::vector<double>(d));
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        const double v = 3.0 * labels[i] + rng.normal();
        X(static_cast<int>(i), j) = v;
        points[i][j] = v;
      }
    }
    const double got = biaslens::silhouette(X, labels, 10000, 1);
    const double want = oracle::silhouette_brute(points, labels);
    max_diff = std::max(max_diff, std::abs(got - want));
    expect(std::abs(got - want) <= 1e-12, "trial " + std::to_string(trial) + ": " +
                                              fmt(got, 17) + " vs " + fmt(want, 17));
  }
  return "50 datasets (n<=200), max |difference| " + fmt(max_diff, 3) + " (bound 1e-12)";
}

biaslens::RunConfig analysis_only_config(uint64_t seed, const std::string& row,
                                         const std::string& col) {
  biaslens::RunConfig config;
  config.stage_discover = false;
  config.seed = seed;
  config.pairs = {{row, col}};
  return config;
}

// 6. Independent-effect scenario: the planted factor leads the gap ranking
// with p < 0.001, within-stratum gradients stay positive, and the verdict is
// independent-effect on every seed.
std::string criterion_independent_scenario() {
  const auto t0 = std::chrono::steady_clock::now();
  double min_gradient = 1e300;
  for (uint64_t seed = 101; seed <= 110; ++seed) {
    const auto synth = biaslens::generate(biaslens::scenario_independent(20000, seed));
    TempDir dir;
    const auto outcome =
        biaslens::run_audit(synth.dataset, analysis_only_config(seed, "bmi", "ps_avg"),
                            {{"records", "synthetic"}}, dir.path());
    const auto report = biaslens::score_recovery_summary(synth.truth, outcome.summary);
    expect(report.planted_factors_flagged.value_or(false),
           "seed " + std::to_string(seed) + ": planted factor not flagged (largest gap, p<0.001)");
    expect(report.verdict_matches.value_or(false),
           "seed " + std::to_string(seed) + ": verdict " + report.observed_verdict +
               ", expected " + report.expected_verdict);

    const auto& ds = synth.dataset;
    const auto row =
        biaslens::bin_factor(ds, "bmi", biaslens::default_binning_options(ds.schema.require("bmi"), 3));
    const auto col = biaslens::bin_factor(
        ds, "ps_avg", biaslens::default_binning_options(ds.schema.require("ps_avg"), 3));
    const auto grid = biaslens::joint_partition(ds, row, col, ds.model_names, 30);
    for (const auto& model : ds.model_names) {
      const auto gradients =
          biaslens::within_stratum_gradients(grid, model, col.labels.front(), col.labels.back());
      size_t with_value = 0;
      for (const auto& stratum : gradients.strata) {
        if (!stratum.gradient_pct) continue;
        ++with_value;
        min_gradient = std::min(min_gradient, *stratum.gradient_pct);
        expect(*stratum.gradient_pct > 0.0,
               "seed " + std::to_string(seed) + " " + model + " stratum " + stratum.stratum +
                   ": gradient " + fmt(*stratum.gradient_pct, 6) + " not positive");
      }
      expect(with_value == grid.n_rows(),
             "seed " + std::to_string(seed) + " " + model + ": only " +
                 std::to_string(with_value) + " usable strata");
    }
  }
  const double secs = seconds_since(t0);
  expect(secs < 300.0, "took " + fmt(secs, 4) + "s, budget 300s");
  return "10 seeds at n=20000, min within-stratum gradient " + fmt(min_gradient, 4) + "pp, " +
         fmt(secs, 3) + "s (budget 300s)";
}

// 7. Confounded scenario: within-stratum gradients collapse to within 3pp of
// zero and the verdict is fully-confounded on every seed.
std::string criterion_confounded_scenario() {
  double max_abs_gradient = 0.0;
  for (uint64_t seed = 201; seed <= 210; ++seed) {
    const auto synth = biaslens::generate(biaslens::scenario_confounded(20000, seed));
    TempDir dir;
    const auto outcome =
        biaslens::run_audit(synth.dataset, analysis_only_config(seed, "ga_weeks", "ps_avg"),
                            {{"records", "synthetic"}}, dir.path());
    const auto report = biaslens::score_recovery_summary(synth.truth, outcome.summary);
    expect(report.verdict_matches.value_or(false),
           "seed " + std::to_string(seed) + ": verdict " + report.observed_verdict +
               ", expected " + report.expected_verdict);

    const auto& ds = synth.dataset;
    const auto row = biaslens::bin_factor(
        ds, "ga_weeks", biaslens::default_binning_options(ds.schema.require("ga_weeks"), 3));
    const auto col = biaslens::bin_factor(
        ds, "ps_avg", biaslens::default_binning_options(ds.schema.require("ps_avg"), 3));
    const auto grid = biaslens::joint_partition(ds, row, col, ds.model_names, 30);
    for (const auto& model : ds.model_names) {
      const auto gradients =
          biaslens::within_stratum_gradients(grid, model, col.labels.front(), col.labels.back());
      for (const auto& stratum : gradients.strata) {
        if (!stratum.gradient_pct) continue;
        max_abs_gradient = std::max(max_abs_gradient, std::abs(*stratum.gradient_pct));
        expect(std::abs(*stratum.gradient_pct) <= 3.0,
               "seed " + std::to_string(seed) + " " + model + " stratum " + stratum.stratum +
                   ": gradient " + fmt(*stratum.gradient_pct, 6) + "pp outside 3pp of zero");
      }
    }
  }
  return "10 seeds at n=20000, max |within-stratum gradient| " + fmt(max_abs_gradient, 4) +
         "pp (bound 3pp), all verdicts fully-confounded";
}

// 8. Count-weighted means are consistent across aggregation routes.
std::string criterion_weighted_means() {
  const auto synth = biaslens::generate(biaslens::scenario_independent(3000, 21));
  const auto& ds = synth.dataset;

  biaslens::DiscoveryConfig discovery;
  discovery.k_min = 2;
  discovery.k_max = 4;
  discovery.restarts = 3;
  discovery.seed = 21;
  const auto slices = biaslens::discover_slices(ds, ds.model_names.front(), discovery);

  double worst_rel = 0.0;
  for (size_t mi = 0; mi < slices.models.size(); ++mi) {
    const auto& model = slices.models[mi];
    double weighted = 0.0;
    size_t total = 0;
    for (const auto& per_model : slices.slice_stats) {
      weighted += static_cast<double>(per_model[mi].n) * per_model[mi].mre_pct;
      total += per_model[mi].n;
    }
    weighted /= static_cast<double>(total);

    std::vector<double> errors;
    for (const auto& record : ds.records) {
      if (!slices.labels.count(record.id) || !record.has_prediction(model)) continue;
      errors.push_back(biaslens::relative_error(record.y_true_g, record.predictions.at(model)));
    }
    const double whole = biaslens::mre(errors);
    const double rel = std::abs(weighted - whole) / std::max(std::abs(weighted), std::abs(whole));
    worst_rel = std::max(worst_rel, rel);
    expect(rel <= 1e-9, model + ": slice-weighted " + fmt(weighted, 17) + " vs whole-set " +
                            fmt(whole, 17));
  }

  const auto row =
      biaslens::bin_factor(ds, "bmi", biaslens::default_binning_options(ds.schema.require("bmi"), 3));
  const auto col = biaslens::bin_factor(
      ds, "ps_avg", biaslens::default_binning_options(ds.schema.require("ps_avg"), 3));
  const auto grid = biaslens::joint_partition(ds, row, col, ds.model_names, 30);
  for (const auto& model : ds.model_names) {
    const auto collapsed = biaslens::collapse_columns(grid, model);
    const auto strata = biaslens::stratified_mre(ds, col, model, 30);
    for (size_t c = 0; c < collapsed.size(); ++c) {
      const double a = collapsed[c];
      const double b = strata[c].stats.mre_pct;
      const double rel = std::abs(a - b) / std::max(std::abs(a), std::abs(b));
      worst_rel = std::max(worst_rel, rel);
      expect(rel <= 1e-9, model + " column " + col.labels[c] + ": collapsed " + fmt(a, 17) +
                              " vs stratified " + fmt(b, 17));
    }
  }
  return "slice and joint-grid aggregations agree, worst relative difference " +
         fmt(worst_rel, 3) + " (bound 1e-9)";
}

// 9. Clinical formulas match independent evaluation and the equal-age
// reference weight returns the birth weight bit for bit.
std::string criterion_clinical() {
  const auto config = biaslens::default_clinical_config();
  const auto& c = config.hadlock;
  auto by_hand = [&](double hc, double ac, double fl) {
    return std::pow(10.0, c[0] + c[1] * ac * fl + c[2] * hc + c[3] * ac + c[4] * fl);
  };
  double max_diff = 0.0;
  int idx = 0;
  for (double hc : {20.0, 25.0, 30.0, 33.0, 36.0}) {
    for (double ac : {16.0, 24.0, 32.0, 38.0}) {
      const double fl = 2.0 + 0.15 * idx++;
      const double got = biaslens::hadlock_efw({hc, ac, fl}, c);
      const double want = by_hand(hc, ac, fl);
      max_diff = std::max(max_diff, std::abs(got - want));
      expect(std::abs(got - want) < 1.0, "triple " + std::to_string(idx) + ": " + fmt(got, 17) +
                                             " vs " + fmt(want, 17));
    }
  }
  const double reference = biaslens::hadlock_efw({30.0, 26.0, 5.5}, c);
  expect(std::abs(reference - 1543.9029605465623) <= 1e-9,
         "reference triple gave " + fmt(reference, 17));

  const double birth_a = 3141.592653589793;
  const double back_a = biaslens::reference_weight_at_scan(birth_a, 250.0, 250.0, config.curve);
  expect(back_a == birth_a, "equal-age reference changed " + fmt(birth_a, 17) + " to " +
                                fmt(back_a, 17));
  const double back_b = biaslens::reference_weight_at_scan(2500.0, 280.0, 280.0, config.curve);
  expect(back_b == 2500.0, "equal-age reference changed 2500 to " + fmt(back_b, 17));
  return "20 triples within 1g of longhand evaluation (max " + fmt(max_diff, 3) +
         "g), equal-age reference weight exact";
}

// 10. Frozen artifacts: repeated CLI audits are byte-identical, every figure
// is well-formed XML, and figure structure matches the analysis shape.
std::string criterion_artifacts() {
  TempDir dir;
  const auto data = dir.file("data");
  const auto gen =
      run_cli("synth --scenario independent --n 600 --seed 17 --out " + shell_quote(data));
  expect(gen.exit_code == 0, "synth failed: " + gen.output);

  const std::string audit_args = " --records " + shell_quote(data + "/records.csv") + " --schema " +
                                 shell_quote(data + "/schema.json") + " --embeddings " +
                                 shell_quote(data + "/embeddings.bin") +
                                 " --seed 13 --k-min 2 --k-max 4 --restarts 2 --min-n 20"
                                 " --pairs bmi:ps_avg --out ";
  const auto out1 = dir.file("out1");
  const auto out2 = dir.file("out2");
  const auto run1 = run_cli("audit" + audit_args + shell_quote(out1));
  expect(run1.exit_code == 0, "first audit failed: " + run1.output);
  const auto run2 = run_cli("audit" + audit_args + shell_quote(out2));
  expect(run2.exit_code == 0, "second audit failed: " + run2.output);

  const std::string id = first_line(run1.output);
  expect(id.size() == 12, "unexpected audit id '" + id + "'");
  const auto files1 = dir_contents(out1);
  const auto files2 = dir_contents(out2);
  expect(files1.size() == 6, "expected 6 output files, found " + std::to_string(files1.size()));
  expect(files1 == files2, "repeated audit runs differ");

  size_t svg_count = 0;
  for (const auto& [name, body] : files1) {
    if (name.size() < 4 || name.substr(name.size() - 4) != ".svg") continue;
    ++svg_count;
    std::string error;
    expect(oracle::xml_well_formed(body, &error), name + ": " + error);
  }
  expect(svg_count == 4, "expected 4 figures, found " + std::to_string(svg_count));

  const auto summary = nlohmann::json::parse(files1.at(id + "_summary.json"));
  const auto& pair = summary.at("intersectional").at("pairs").at(0);
  const size_t rows = pair.at("grid").at("row_binning").at("labels").size();
  const size_t cols = pair.at("grid").at("col_binning").at("labels").size();
  const auto models = summary.at("dataset").at("models").get<std::vector<std::string>>();
  for (const auto& model : models) {
    const auto& heatmap = files1.at(id + "_heatmap_bmi_ps_avg_" + model + ".svg");
    const size_t cells = count_occurrences(heatmap, "class=\"cell\"");
    expect(cells == rows * cols, model + " heatmap has " + std::to_string(cells) +
                                     " cells, expected " + std::to_string(rows * cols));
  }
  const size_t polygons = count_occurrences(files1.at(id + "_radar_gaps.svg"), "<polygon");
  expect(polygons == models.size(), "gap radar has " + std::to_string(polygons) +
                                        " polygons, expected " + std::to_string(models.size()));
  return "byte-identical reruns, 4 well-formed figures, " + std::to_string(rows) + "x" +
         std::to_string(cols) + " heatmap cells, " + std::to_string(polygons) +
         " radar polygons";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-biaslens-cli>\n";
    return 2;
  }
  g_cli = argv[1];

  struct Entry {
    int id;
    const char* title;
    std::function<std::string()> fn;
  };
  const std::vector<Entry> criteria = {
      {1, "gap statistics", criterion_gap_stats},
      {2, "cluster count selection", criterion_select_k},
      {3, "pca rank recovery", criterion_pca},
      {4, "mann-whitney agreement", criterion_mwu},
      {5, "silhouette vs brute force", criterion_silhouette},
      {6, "independent-effect recovery", criterion_independent_scenario},
      {7, "confounded recovery", criterion_confounded_scenario},
      {8, "weighted-mean consistency", criterion_weighted_means},
      {9, "clinical formulas", criterion_clinical},
      {10, "frozen audit artifacts", criterion_artifacts},
  };

  int failures = 0;
  for (const auto& entry : criteria) {
    std::string line;
    try {
      const std::string detail = entry.fn();
      line = "PASS " + std::to_string(entry.id) + " " + entry.title + ": " + detail;
    } catch (const std::exception& e) {
      ++failures;
      line = "FAIL " + std::to_string(entry.id) + " " + entry.title + ": " + e.what();
    }
    std::cout << line << "\n" << std::flush;
  }
  if (failures > 0) {
    std::cout << failures << " of " << criteria.size() << " checks failed\n";
    return 1;
  }
  std::cout << "all " << criteria.size() << " checks passed\n";
  return 0;
}
