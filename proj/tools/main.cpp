#include "tensorcorr/decompositions.hpp"
#include "tensorcorr/hcm.hpp"
#include "tensorcorr/ingestion.hpp"
#include "tensorcorr/io.hpp"
#include "tensorcorr/model_selection.hpp"
#include "tensorcorr/simulation.hpp"
#include "tensorcorr/spectrum.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace tc = tensorcorr;
namespace fs = std::filesystem;

namespace {

// "a..b" (inclusive) or a single integer
std::vector<int> parse_ranks(const std::string& s) {
    auto parse_int = [&](const std::string& part) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(part, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("--ranks: '" + part + "' is not an integer");
        }
        if (used != part.size())
            throw std::invalid_argument("--ranks: '" + part + "' is not an integer");
        return v;
    };
    int lo, hi;
    std::size_t dots = s.find("..");
    if (dots == std::string::npos) {
        lo = hi = parse_int(s);
    } else {
        lo = parse_int(s.substr(0, dots));
        hi = parse_int(s.substr(dots + 2));
    }
    if (lo < 1 || hi < lo)
        throw std::invalid_argument("--ranks: need 1 <= a <= b, got '" + s + "'");
    std::vector<int> out;
    for (int r = lo; r <= hi; ++r) out.push_back(r);
    return out;
}

// options shared by the model-fitting subcommands
struct FitOptions {
    std::string model = "sdt";
    std::string ranks = "2..15";
    std::string market_mode = "keep";
    std::uint64_t seed = 0;
    double tol = 1e-8;
    int max_iter = 500;
    int restarts = 5;
    double scan_tol = 1e-7;
    int scan_max_iter = 200;
    int scan_restarts = 2;
    int time_rank = 1;
    double concordia_threshold = 80.0;
    double nearest_tol = 1e-7;
    int nearest_max_iter = 200;
    bool collapse_time = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
    cmd->add_option("--model", o.model, "parafac|tucker|sdt")->capture_default_str();
    cmd->add_option("--ranks", o.ranks, "rank grid, a..b or a single value")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
    cmd->add_option("--tol", o.tol, "fit convergence tolerance")->capture_default_str();
    cmd->add_option("--max-iter", o.max_iter, "fit sweep cap")->capture_default_str();
    cmd->add_option("--restarts", o.restarts, "fit restarts")->capture_default_str();
    cmd->add_option("--scan-tol", o.scan_tol, "scan-stage tolerance")->capture_default_str();
    cmd->add_option("--scan-max-iter", o.scan_max_iter, "scan-stage sweep cap")
        ->capture_default_str();
    cmd->add_option("--scan-restarts", o.scan_restarts, "scan-stage restarts")
        ->capture_default_str();
    cmd->add_option("--time-rank", o.time_rank, "time components for tucker/sdt")
        ->capture_default_str();
    cmd->add_option("--concordia-threshold", o.concordia_threshold,
                    "acceptance bar for parafac scans")
        ->capture_default_str();
    cmd->add_option("--nearest-tol", o.nearest_tol, "nearest-correlation tolerance")
        ->capture_default_str();
    cmd->add_option("--nearest-max-iter", o.nearest_max_iter,
                    "nearest-correlation iteration cap")
        ->capture_default_str();
    cmd->add_flag("--collapse-time", o.collapse_time,
                  "collapse multiple time components into one link matrix");
}

tc::ScanConfig make_scan_config(const FitOptions& o) {
    tc::ScanConfig cfg;
    cfg.als = tc::AlsConfig{o.scan_max_iter, o.scan_tol, o.scan_restarts, o.seed};
    cfg.time_rank = o.time_rank;
    cfg.concordia_threshold = o.concordia_threshold;
    return cfg;
}

tc::HcmConfig make_hcm_config(const FitOptions& o) {
    tc::HcmConfig cfg;
    cfg.scan = make_scan_config(o);
    cfg.refit = tc::AlsConfig{o.max_iter, o.tol, o.restarts, o.seed};
    cfg.nearest_tol = o.nearest_tol;
    cfg.nearest_max_iter = o.nearest_max_iter;
    cfg.collapse_time = o.collapse_time;
    return cfg;
}

double pearson(const tc::Vector& a, const tc::Vector& b) {
    double ma = a.mean(), mb = b.mean();
    tc::Vector ca = a.array() - ma, cb = b.array() - mb;
    double denom = ca.norm() * cb.norm();
    if (denom == 0.0)
        throw std::invalid_argument("alignment: a constant series has no correlation");
    return ca.dot(cb) / denom;
}

void cmd_cov_tensor(const std::string& input, const std::string& output, int window, int step,
                    bool calendar, bool prices, bool returns) {
    if (prices == returns)
        throw std::invalid_argument("cov-tensor: pass exactly one of --prices / --returns");
    tc::ReturnsPanel panel = tc::load_panel_csv(input);
    if (prices) panel = tc::log_returns(panel);
    tc::WindowSpec spec;
    if (calendar) {
        spec.unit = tc::WindowUnit::calendar_month;
    } else {
        spec.unit = tc::WindowUnit::observations;
        spec.length = window;
        spec.step = step;
    }
    std::vector<std::string> warnings;
    tc::Tensor3 t = tc::build_cov_tensor(panel, spec, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    tc::write_tensor(t, output);
    auto [i, j, k] = t.dims();
    std::printf("wrote %lld x %lld x %lld covariance tensor to %s\n",
                static_cast<long long>(i), static_cast<long long>(j),
                static_cast<long long>(k), output.c_str());
}

void cmd_simulate(const tc::SimConfig& cfg, const std::string& series_file,
                  const std::string& out_dir) {
    tc::SimConfig effective = cfg;
    if (!series_file.empty()) effective.time_series = tc::read_series_csv(series_file);
    tc::SimOutput out = tc::simulate(effective);
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    tc::write_tensor(out.tensor, dir / "tensor.txt");
    tc::write_matrix_csv(out.omega_true.values(), dir / "omega_true.csv");
    tc::write_series_csv(out.time_series, dir / "time_series.csv");
    nlohmann::json echo;
    echo["block_sizes"] = effective.block_sizes;
    echo["d_block"] = effective.d_block;
    echo["d_full"] = effective.d_full;
    echo["w_e"] = effective.w_e;
    echo["w_s"] = effective.w_s;
    echo["svd_rank"] = effective.svd_rank;
    echo["t_len"] = effective.t_len;
    echo["noise_sigma"] = effective.noise_sigma;
    echo["seed"] = effective.seed;
    echo["ts_level"] = effective.ts_level;
    echo["ts_persistence"] = effective.ts_persistence;
    echo["ts_innovation_sd"] = effective.ts_innovation_sd;
    echo["var_min"] = effective.var_min;
    echo["var_max"] = effective.var_max;
    echo["time_series_file"] = series_file;
    tc::write_text_atomic(dir / "config.json", echo.dump(2) + "\n");
    auto [i, j, k] = out.tensor.dims();
    std::printf("simulated %lld x %lld x %lld tensor in %s\n", static_cast<long long>(i),
                static_cast<long long>(j), static_cast<long long>(k), out_dir.c_str());
}

void cmd_scan(const std::string& input, const std::string& output, const FitOptions& o) {
    tc::Tensor3 t = tc::read_tensor(input);
    tc::RankScanResult res =
        tc::scan_ranks(t, tc::model_kind_from_string(o.model), parse_ranks(o.ranks),
                       make_scan_config(o));
    tc::write_scan_csv(res, output);
    for (const auto& f : res.failures) std::fprintf(stderr, "warning: %s\n", f.c_str());
    std::printf("selected rank %d by %s\n", res.selected, res.criterion_name.c_str());
}

void cmd_hcm(const std::string& input, const std::string& out_dir, const FitOptions& o) {
    tc::Tensor3 t = tc::read_tensor(input);
    tc::HcmResult res = tc::build_hcm(t, tc::model_kind_from_string(o.model),
                                      parse_ranks(o.ranks),
                                      tc::market_mode_from_string(o.market_mode),
                                      make_hcm_config(o));
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    tc::write_matrix_csv(res.hcm.values(), dir / "hcm.csv");
    tc::write_scan_csv(res.scan, dir / "scan.csv");
    tc::write_hcm_provenance(res, dir / "provenance.json");
    std::printf("selected rank %d by %s; projection residual %s\n", res.selected_rank,
                res.scan.criterion_name.c_str(),
                tc::format_double(res.projection_residual).c_str());
}

void cmd_split_compare(const std::string& input, const std::string& out_dir, int at,
                       bool drop_zero, const FitOptions& o) {
    tc::Tensor3 t = tc::read_tensor(input);
    auto [i, j, k] = t.dims();
    (void)i;
    (void)j;
    tc::Index split_at = at == 0 ? k / 2 : at;
    auto [first, second] = tc::split_tensor(t, split_at);
    tc::ModelKind kind = tc::model_kind_from_string(o.model);
    tc::MarketMode mm = tc::market_mode_from_string(o.market_mode);
    std::vector<int> grid = parse_ranks(o.ranks);
    tc::HcmConfig cfg = make_hcm_config(o);
    tc::HcmResult r1 = tc::build_hcm(first, kind, grid, mm, cfg);
    tc::HcmResult r2 = tc::build_hcm(second, kind, grid, mm, cfg);
    tc::SpectrumComparison comp = tc::compare_spectra(r1.hcm, r2.hcm, drop_zero);
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    tc::write_matrix_csv(r1.hcm.values(), dir / "hcm_1.csv");
    tc::write_matrix_csv(r2.hcm.values(), dir / "hcm_2.csv");
    tc::write_hcm_provenance(r1, dir / "provenance_1.json");
    tc::write_hcm_provenance(r2, dir / "provenance_2.json");
    tc::write_test_report_csv(comp, dir / "spectrum_tests.csv");
    std::printf("split at %lld: Kruskal-Wallis p = %s, Kolmogorov-Smirnov p = %s\n",
                static_cast<long long>(split_at), tc::format_double(comp.kw.p_value).c_str(),
                tc::format_double(comp.ks.p_value).c_str());
}

void cmd_dynamic(const std::string& input, const std::string& output,
                 const std::string& series_file, bool volatility, const FitOptions& o) {
    tc::Tensor3 t = tc::read_tensor(input);
    tc::ModelKind kind = tc::model_kind_from_string(o.model);
    tc::RankScanResult scan =
        tc::scan_ranks(t, kind, parse_ranks(o.ranks), make_scan_config(o));
    tc::AlsConfig refit{o.max_iter, o.tol, o.restarts, o.seed};

    tc::Matrix factor;
    if (kind == tc::ModelKind::parafac) {
        auto [model, rep] = tc::fit_parafac(t, scan.selected, refit);
        factor = model.c.rowwise().sum();  // one series: the summed components
    } else if (kind == tc::ModelKind::tucker) {
        auto [model, rep] = tc::fit_tucker(t, {scan.selected, scan.selected, o.time_rank}, refit);
        factor = model.c;
    } else {
        auto [model, rep] = tc::fit_sdt(t, scan.selected, o.time_rank, refit);
        factor = model.c;
    }
    // sign convention: make each column mean-positive
    for (tc::Index c = 0; c < factor.cols(); ++c)
        if (factor.col(c).mean() < 0.0) factor.col(c) = -factor.col(c);
    if (volatility) {
        if ((factor.array() < 0.0).any())
            throw std::invalid_argument(
                "dynamic: --volatility needs a nonnegative component after sign alignment");
        factor = factor.array().sqrt().matrix();
    }
    tc::write_matrix_csv(factor, output);

    if (!series_file.empty()) {
        std::vector<double> ref = tc::read_series_csv(series_file);
        if (static_cast<tc::Index>(ref.size()) != factor.rows())
            throw std::invalid_argument("dynamic: reference series has " +
                                        std::to_string(ref.size()) + " entries, tensor has " +
                                        std::to_string(factor.rows()) + " slices");
        tc::Vector refv =
            Eigen::Map<const tc::Vector>(ref.data(), static_cast<tc::Index>(ref.size()));
        double corr = std::abs(pearson(factor.col(0), refv));
        tc::Matrix one(1, 1);
        one(0, 0) = corr;
        fs::path align = fs::path(output).parent_path() / "alignment.csv";
        tc::write_matrix_csv(one, align);
        std::printf("alignment_correlation=%s\n", tc::format_double(corr).c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariance-tensor factorization and hidden-correlation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    // cov-tensor
    std::string ct_input, ct_output;
    int ct_window = 0, ct_step = 0;
    bool ct_calendar = false, ct_prices = false, ct_returns = false;
    auto* ct = app.add_subcommand("cov-tensor", "windowed covariance tensor from a panel CSV");
    ct->add_option("--input", ct_input, "panel CSV")->required();
    ct->add_option("--output", ct_output, "tensor file to write")->required();
    ct->add_option("--window", ct_window, "window length in observations");
    ct->add_option("--step", ct_step, "window stride (default: window)");
    ct->add_flag("--calendar-month", ct_calendar, "one window per calendar month");
    ct->add_flag("--prices", ct_prices, "input holds prices; take log-returns first");
    ct->add_flag("--returns", ct_returns, "input already holds returns");

    // simulate
    tc::SimConfig sim_cfg;
    std::string sim_out_dir, sim_series;
    auto* sim = app.add_subcommand("simulate", "block-correlated covariance tensor generator");
    sim->add_option("--out-dir", sim_out_dir, "output directory")->required();
    sim->add_option("--blocks", sim_cfg.block_sizes, "block sizes")
        ->delimiter(',')
        ->capture_default_str();
    sim->add_option("--d-block", sim_cfg.d_block, "Beta shape inside blocks")
        ->capture_default_str();
    sim->add_option("--d-full", sim_cfg.d_full, "Beta shape of the mixing matrix")
        ->capture_default_str();
    sim->add_option("--w-e", sim_cfg.w_e, "block-diagonal weight")->capture_default_str();
    sim->add_option("--w-s", sim_cfg.w_s, "mixing weight")->capture_default_str();
    sim->add_option("--svd-rank", sim_cfg.svd_rank, "truncation rank")->capture_default_str();
    sim->add_option("--t-len", sim_cfg.t_len, "number of slices")->capture_default_str();
    sim->add_option("--noise-sigma", sim_cfg.noise_sigma, "noise scale")->capture_default_str();
    sim->add_option("--seed", sim_cfg.seed, "random seed")->capture_default_str();
    sim->add_option("--ts-level", sim_cfg.ts_level, "synthesized series level")
        ->capture_default_str();
    sim->add_option("--ts-persistence", sim_cfg.ts_persistence, "AR(1) persistence")
        ->capture_default_str();
    sim->add_option("--ts-innovation-sd", sim_cfg.ts_innovation_sd, "AR(1) innovation sd")
        ->capture_default_str();
    sim->add_option("--var-min", sim_cfg.var_min, "variance draw lower bound")
        ->capture_default_str();
    sim->add_option("--var-max", sim_cfg.var_max, "variance draw upper bound")
        ->capture_default_str();
    sim->add_option("--time-series", sim_series, "CSV with the modulating series");

    // scan
    std::string scan_input, scan_output = "scan.csv";
    FitOptions scan_opt;
    auto* scan = app.add_subcommand("scan", "rank scan with the model's criterion");
    scan->add_option("--input", scan_input, "tensor file")->required();
    scan->add_option("--output", scan_output, "scan CSV to write")->capture_default_str();
    add_fit_options(scan, scan_opt);

    // hcm
    std::string hcm_input, hcm_out_dir;
    FitOptions hcm_opt;
    auto* hcm = app.add_subcommand("hcm", "hidden correlation matrix pipeline");
    hcm->add_option("--input", hcm_input, "tensor file")->required();
    hcm->add_option("--out-dir", hcm_out_dir, "output directory")->required();
    hcm->add_option("--market-mode", hcm_opt.market_mode, "keep|remove")
        ->capture_default_str();
    add_fit_options(hcm, hcm_opt);

    // split-compare
    std::string sc_input, sc_out_dir;
    int sc_at = 0;
    bool sc_drop_zero = false;
    FitOptions sc_opt;
    auto* sc = app.add_subcommand("split-compare",
                                  "compare hidden correlations from two tensor halves");
    sc->add_option("--input", sc_input, "tensor file")->required();
    sc->add_option("--out-dir", sc_out_dir, "output directory")->required();
    sc->add_option("--at", sc_at, "split slice (default: middle)");
    sc->add_flag("--drop-zero", sc_drop_zero, "drop near-zero eigenvalues before testing");
    sc->add_option("--market-mode", sc_opt.market_mode, "keep|remove")->capture_default_str();
    add_fit_options(sc, sc_opt);

    // dynamic
    std::string dyn_input, dyn_output, dyn_series;
    bool dyn_volatility = false;
    FitOptions dyn_opt;
    auto* dyn = app.add_subcommand("dynamic", "extract the fitted time factor");
    dyn->add_option("--input", dyn_input, "tensor file")->required();
    dyn->add_option("--output", dyn_output, "factor CSV to write")->required();
    dyn->add_option("--series", dyn_series, "reference series CSV for alignment");
    dyn->add_flag("--volatility", dyn_volatility, "emit the square root of the component");
    add_fit_options(dyn, dyn_opt);

    ct->callback([&] {
        cmd_cov_tensor(ct_input, ct_output, ct_window, ct_step, ct_calendar, ct_prices,
                       ct_returns);
    });
    sim->callback([&] { cmd_simulate(sim_cfg, sim_series, sim_out_dir); });
    scan->callback([&] { cmd_scan(scan_input, scan_output, scan_opt); });
    hcm->callback([&] { cmd_hcm(hcm_input, hcm_out_dir, hcm_opt); });
    sc->callback(
        [&] { cmd_split_compare(sc_input, sc_out_dir, sc_at, sc_drop_zero, sc_opt); });
    dyn->callback(
        [&] { cmd_dynamic(dyn_input, dyn_output, dyn_series, dyn_volatility, dyn_opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const tc::NearestCorrelationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const tc::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
