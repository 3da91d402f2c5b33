#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "regime_q/config.hpp"
#include "regime_q/learn_loop.hpp"
#include "regime_q/linalg.hpp"
#include "regime_q/quadrature.hpp"
#include "regime_q/version.hpp"

namespace regime_q {

namespace fs = std::filesystem;

/// Plain decimal with `sig` significant digits (no exponent).
inline std::string decimal(double v, int sig = 10) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    if (v == 0.0) return "0";
    const int mag = static_cast<int>(std::floor(std::log10(std::abs(v))));
    const int places = std::max(0, sig - 1 - mag);
    char buf[400];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

inline const char* trace_header = "iter,rho1,rho2,sigma1,sigma2,mean_abs_G,clamps,blowups";

inline std::string trace_csv(const TrainTrace& tr) {
    std::string s = std::string(trace_header) + "\n";
    for (const TraceRow& r : tr.rows) {
        s += std::to_string(r.iter);
        for (double v : r.params.v) s += "," + decimal(v);
        s += "," + decimal(r.mean_abs_G) + "," + std::to_string(r.clamps) + "," + std::to_string(r.blowups) + "\n";
    }
    return s;
}

struct CsvRow {
    int iter = 0;
    Vec4 params{};
    double mean_abs_G = 0.0;
    int clamps = 0, blowups = 0;
};

/// Reads a trace.csv back. Throws config_error on a header or column mismatch.
inline std::vector<CsvRow> parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != trace_header) throw config_error("trace.csv: unexpected header");
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw config_error("trace.csv: expected 8 columns");
        CsvRow r;
        r.iter = std::stoi(cells[0]);
        for (std::size_t j = 0; j < 4; ++j) r.params[j] = std::stod(cells[1 + j]);
        r.mean_abs_G = std::stod(cells[5]);
        r.clamps = std::stoi(cells[6]);
        r.blowups = std::stoi(cells[7]);
        rows.push_back(r);
    }
    return rows;
}

/// 2x2 panels of the four parameters against iteration, with dashed true-value lines.
inline std::string convergence_svg(const TrainTrace& tr, const LearnParams& truth, const std::string& title) {
    const double W = 900, H = 640, pw = 400, ph = 250;
    const char* names[4] = {"rho1", "rho2", "sigma1", "sigma2"};
    std::ostringstream o;
    o << std::setprecision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    const std::size_t n = tr.rows.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 1500);
    for (std::size_t j = 0; j < 4; ++j) {
        const double ox = 50 + (j % 2) * (pw + 50), oy = 40 + (j / 2) * (ph + 50);
        double lo = truth[j], hi = truth[j];
        for (const auto& r : tr.rows) {
            lo = std::min(lo, r.params[j]);
            hi = std::max(hi, r.params[j]);
        }
        if (hi - lo < 1e-9) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        auto px = [&](double it) { return ox + pw * (n > 1 ? (it - 1) / static_cast<double>(n - 1) : 0.5); };
        auto py = [&](double v) { return oy + ph * (1.0 - (v - lo) / (hi - lo)); };
        o << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << pw << "\" height=\"" << ph
          << "\" fill=\"none\" stroke=\"#444\"/>\n";
        o << "<text x=\"" << ox + pw / 2 << "\" y=\"" << oy - 6 << "\" text-anchor=\"middle\">" << names[j] << "</text>\n";
        o << "<text x=\"" << ox - 4 << "\" y=\"" << oy + 10 << "\" text-anchor=\"end\">" << hi << "</text>\n";
        o << "<text x=\"" << ox - 4 << "\" y=\"" << oy + ph << "\" text-anchor=\"end\">" << lo << "</text>\n";
        o << "<text x=\"" << ox + pw << "\" y=\"" << oy + ph + 14 << "\" text-anchor=\"end\">" << n << "</text>\n";
        o << "<line x1=\"" << ox << "\" y1=\"" << py(truth[j]) << "\" x2=\"" << ox + pw << "\" y2=\"" << py(truth[j])
          << "\" stroke=\"#c00\" stroke-dasharray=\"6,4\"/>\n";
        if (n == 0) continue;
        o << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
        for (std::size_t r = 0; r < n; r += stride)
            o << px(static_cast<double>(tr.rows[r].iter)) << "," << py(tr.rows[r].params[j]) << " ";
        o << px(static_cast<double>(tr.rows.back().iter)) << "," << py(tr.rows.back().params[j]);
        o << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// write-then-rename so readers never see a half-written file
inline void write_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunOptions {
    fs::path out_dir = "out";
    bool svg = false;
};

/// Trains, then writes trace.csv, manifest.json and optionally convergence.svg. Returns a
/// process exit status; IO problems are reported on `err`.
inline int run_experiment(const LearningConfig& c, const RunOptions& opt, std::ostream& log = std::cout,
                          std::ostream& err = std::cerr) {
    try {
        validate(c);
        fs::create_directories(opt.out_dir);
        const std::string started = utc_timestamp();
        const auto t0 = std::chrono::steady_clock::now();
        const TrainTrace tr = train(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const fs::path csv = opt.out_dir / "trace.csv";
        write_atomic(csv, trace_csv(tr));
        nlohmann::json outputs = {{"trace", csv.string()}};
        if (opt.svg) {
            const fs::path svg = opt.out_dir / "convergence.svg";
            write_atomic(svg, convergence_svg(tr, c.theta_true, c.name + " (seed " + std::to_string(c.seed) + ")"));
            outputs["svg"] = svg.string();
        }
        const LearnParams tail = tr.tail_mean(500);
        nlohmann::json manifest = {
            {"name", c.name},
            {"seed", c.seed},
            {"version", version},
            {"started", started},
            {"finished", utc_timestamp()},
            {"wall_seconds", secs},
            {"threads", thread_count()},
            {"initial", tr.initial.v},
            {"final", tr.final_params().v},
            {"tail_mean_500", tail.v},
            {"theta_true", c.theta_true.v},
            {"outputs", outputs},
            {"config", serialize(c)},
        };
        const fs::path man = opt.out_dir / "manifest.json";
        manifest["outputs"]["manifest"] = man.string();
        write_atomic(man, manifest.dump(2) + "\n");

        log << c.name << " seed " << c.seed << ": " << c.n_iters << " iterations in " << std::fixed
            << std::setprecision(1) << secs << " s\n";
        log << std::setprecision(4) << "tail mean (500): rho=(" << tail[0] << ", " << tail[1] << ") sigma=("
            << tail[2] << ", " << tail[3] << ")  true: rho=(" << c.theta_true[0] << ", " << c.theta_true[1]
            << ") sigma=(" << c.theta_true[2] << ", " << c.theta_true[3] << ")\n";
        log << "wrote " << csv.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << "\n";
        return 1;
    }
}

/// Config snapshot stored in a manifest written by run_experiment.
inline LearningConfig config_from_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j["config"].is_string()) throw config_error("manifest has no config snapshot");
    return load_config_text(j["config"].get<std::string>());
}

// ---------------------------------------------------------------- verify battery

enum class VerifyLevel { fast, full };

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace verify {

inline Mat2 series_exp(const Mat2& m, int terms = 30) {
    Mat2 sum = Mat2::identity(), term = Mat2::identity();
    for (int n = 1; n < terms; ++n) {
        term = (1.0 / n) * (term * m);
        sum = sum + term;
    }
    return sum;
}

inline std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(3) << v;
    return o.str();
}

inline CheckResult expm_series() {
    Stream rng(11, 1);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const double a = rng.uniform(), b = rng.uniform(), tau = 2.0 * rng.uniform();
        const Mat2 Q{{-a, a, b, -b}};
        const Mat2 e = regime_matrix_exp(Q, tau), s = series_exp(tau * Q);
        for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(e.m[k] - s.m[k]));
    }
    return {"matrix exponential vs 30-term series", worst <= 1e-12, "max err " + fmt(worst)};
}

inline CheckResult single_regime_closed_forms() {
    const Mat2 zero{};
    SolveOptions o{0.5, 1.0, 25, 10};
    const CoeffTable t1 = solve_p1(LearnParams{{0.95, 0.95, 0.2, 0.2}}, Vec2{{0.01, 0.01}}, zero, o);
    const double e1 = std::abs(t1.A[0][0] - std::exp(-2.0 * (0.95 * 0.95 - 0.01)));
    const CoeffTable t2 = solve_p2(LearnParams{{0.5, 0.5, 0.2, 0.2}}, Vec2{{0.02, 0.02}}, zero, o, ActionInterval{},
                                   -1.0, [](double) { return 1.0; });
    const double e2 = std::abs(t2.A[0][0] - std::exp(0.04));
    const double worst = std::max(e1, e2);
    return {"single-regime A(0) closed forms", worst <= 1e-10, "max err " + fmt(worst)};
}

inline std::shared_ptr<ModelSettings> settings_with_K(const LearningConfig& c, int K) {
    auto s = std::make_shared<ModelSettings>(*model_settings(c));
    s->K = K;
    return s;
}

inline CheckResult grid_doubling(const LearningConfig& c) {
    const auto s1 = settings_with_K(c, c.K), s2 = settings_with_K(c, 2 * c.K);
    const Vec2 w = Model::multiplier(c.theta_true, *s1);
    const Model m1 = Model::build(c.theta_true, s1, w), m2 = Model::build(c.theta_true, s2, w);
    double worst = 0.0;
    for (int i0 = 0; i0 < 2; ++i0) {
        const CoeffTable &a = m1.table(i0), &b = m2.table(i0);
        for (std::size_t i = 0; i < 2; ++i)
            for (double d : {a.A[0][i] - b.A[0][i], a.B[0][i] - b.B[0][i], a.C[0][i] - b.C[0][i], a.D[0][i] - b.D[0][i]})
                worst = std::max(worst, std::abs(d));
    }
    return {c.name + ": grid doubling at t=0", worst <= 1e-4, "max change " + fmt(worst)};
}

// stored derivatives against central differences of a 16x finer solve
inline CheckResult derivative_consistency(const LearningConfig& c) {
    const int mult = 16;
    const auto s1 = settings_with_K(c, c.K), sf = settings_with_K(c, mult * c.K);
    const Vec2 w = Model::multiplier(c.theta_true, *s1);
    const Model m1 = Model::build(c.theta_true, s1, w), mf = Model::build(c.theta_true, sf, w);
    const double h = c.T / (mult * c.K);
    double worst = 0.0;
    const CoeffTable &a = m1.table(0), &f = mf.table(0);
    for (std::size_t k = 1; k + 1 < a.grid.size(); ++k) {
        const std::size_t kf = k * mult;
        for (std::size_t i = 0; i < 2; ++i) {
            const double dA = (f.A[kf + 1][i] - f.A[kf - 1][i]) / (2 * h);
            const double dB = (f.B[kf + 1][i] - f.B[kf - 1][i]) / (2 * h);
            const double dC = (f.C[kf + 1][i] - f.C[kf - 1][i]) / (2 * h);
            const double dD = (f.D[kf + 1][i] - f.D[kf - 1][i]) / (2 * h);
            for (double d : {dA - a.A_dot[k][i], dB - a.B_dot[k][i], dC - a.C_dot[k][i], dD - a.D_dot[k][i]})
                worst = std::max(worst, std::abs(d));
        }
    }
    return {c.name + ": ODE derivatives vs refined differences", worst <= 1e-3, "max gap " + fmt(worst)};
}

inline CheckResult policy_normalization() {
    Stream rng(12, 1);
    double worst_mass = 0.0, worst_mom = 0.0;
    const ActionInterval iv{};
    for (int n = 0; n < 100;) {
        const double gamma = 0.2 + rng.uniform();
        const double k2 = 0.05 * rng.uniform();
        const double k1 = 0.2 * (rng.uniform() - 0.5);
        // positivity on the whole interval: check the ends and the vertex
        const double psi = (2.0 * gamma - k2 * (iv.hi * iv.hi * iv.hi - iv.lo * iv.lo * iv.lo) / 3.0) / iv.width();
        auto H = [&](double a) { return (k2 * a + k1) * a + psi; };
        const double vx = k2 > 0.0 ? std::clamp(-k1 / (2.0 * k2), iv.lo, iv.hi) : iv.lo;
        if (H(iv.lo) <= 0.0 || H(iv.hi) <= 0.0 || H(vx) <= 0.0) continue;
        ++n;
        const QuadraticPolicy pi(k1, k2, gamma, iv);
        const double mass = simpson([&](double a) { return pi.density(a); }, iv.lo, iv.hi, 20001);
        const double m1 = simpson([&](double a) { return a * pi.density(a); }, iv.lo, iv.hi, 20001);
        const double m2 = simpson([&](double a) { return a * a * pi.density(a); }, iv.lo, iv.hi, 20001);
        const Moments E = quadratic_moments(pi);
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        worst_mom = std::max({worst_mom, std::abs(E.mean - m1), std::abs(E.second - m2)});
    }
    const bool ok = worst_mass <= 1e-8 && worst_mom <= 1e-8;
    return {"quadratic policy mass and moments vs quadrature", ok,
            "mass err " + fmt(worst_mass) + ", moment err " + fmt(worst_mom)};
}

inline CheckResult sampler_moments(int n) {
    const QuadraticPolicy pi(0.3, 0.02, 0.5, ActionInterval{});  // clamped at the left end
    Stream rng(13, 1);
    std::vector<double> xs(static_cast<std::size_t>(n));
    double s1 = 0.0, s2 = 0.0;
    for (auto& x : xs) {
        x = sample_action(pi, rng);
        s1 += x;
        s2 += x * x;
    }
    const Moments E{pi.raw_moment(1), pi.raw_moment(2)};
    const double mean = s1 / n, sec = s2 / n;
    const double var = pi.raw_moment(2) - E.mean * E.mean;
    const double var2 = pi.raw_moment(4) - E.second * E.second;
    const double z1 = (mean - E.mean) / std::sqrt(var / n), z2 = (sec - E.second) / std::sqrt(var2 / n);
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double F = pi.cdf(xs[k]);
        ks = std::max({ks, std::abs(F - static_cast<double>(k) / n), std::abs(F - static_cast<double>(k + 1) / n)});
    }
    const double crit = 1.628 / std::sqrt(static_cast<double>(n));
    const bool ok = std::abs(z1) <= 3 && std::abs(z2) <= 3 && ks < crit;
    return {"quadratic sampler moments and KS", ok,
            "z(mean) " + fmt(z1) + ", z(second) " + fmt(z2) + ", KS " + fmt(ks) + " < " + fmt(crit)};
}

inline CheckResult martingale(const LearningConfig& c, double sigma1_factor, int episodes) {
    LearnParams p = c.theta_true;
    p[2] *= sigma1_factor;
    const MartingaleStat st = martingale_statistic(c, p, episodes, 7);
    const bool at_truth = sigma1_factor == 1.0;
    const bool ok = at_truth ? std::abs(st.z()) <= 3.0 : std::abs(st.z()) > 4.0;
    const std::string what = at_truth ? ": martingale at truth" : ": martingale detects sigma1 x1.5";
    return {c.name + what, ok, "z = " + fmt(st.z()) + " over " + std::to_string(st.episodes) + " episodes"};
}

inline double relative_change(const Vec4& a, const Vec4& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        num += (a[j] - b[j]) * (a[j] - b[j]);
        den += a[j] * a[j];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline CheckResult fd_stability(const LearningConfig& c) {
    const auto s = model_settings(c);
    const LearnParams p = initial_params(c);
    const BatchGradients g1 = batch_gradients(c, s, p, 1, c.fd_step, thread_count());
    const BatchGradients g2 = batch_gradients(c, s, p, 1, 0.5 * c.fd_step, thread_count());
    double worst = std::max(relative_change(g1.critic_theta, g2.critic_theta),
                            relative_change(g1.critic_zeta, g2.critic_zeta));
    if (c.algorithm != Algorithm::martingale) worst = std::max(worst, relative_change(g1.actor, g2.actor));
    return {c.name + ": gradients under FD-step halving", worst <= 1e-3, "max relative change " + fmt(worst)};
}

// objective \int (q pi + gamma (pi - pi^2)) on a Simpson grid
inline CheckResult lemma_maximizer() {
    Stream rng(14, 1);
    const ActionInterval iv{};
    const std::size_t nodes = 2001;
    const double h = iv.width() / (nodes - 1);
    std::vector<double> wts(nodes, 2.0 * h / 3.0);
    for (std::size_t k = 1; k < nodes; k += 2) wts[k] = 4.0 * h / 3.0;
    wts.front() = wts.back() = h / 3.0;
    double worst_margin = INFINITY;
    for (int inst = 0; inst < 20; ++inst) {
        const double curv = 0.02 + 0.5 * rng.uniform(), peak = 8.0 * (rng.uniform() - 0.5);
        const double gamma = 0.2 + rng.uniform();
        auto q = [&](double a) { return -curv * (a - peak) * (a - peak); };
        const GridDensity best = tsallis_improvement_density(q, 2.0, gamma, iv, nodes);
        auto objective = [&](const std::vector<double>& pi) {
            double s = 0.0;
            for (std::size_t k = 0; k < nodes; ++k) {
                const double a = iv.lo + h * k;
                s += wts[k] * (q(a) * pi[k] + gamma * (pi[k] - pi[k] * pi[k]));
            }
            return s;
        };
        const double f0 = objective(best.values);
        for (int trial = 0; trial < 200; ++trial) {
            const double c = 8.0 * (rng.uniform() - 0.5), width = 0.3 + 2.0 * rng.uniform();
            const double eps = 0.5 * rng.uniform();
            std::vector<double> pi(nodes);
            double mass = 0.0;
            for (std::size_t k = 0; k < nodes; ++k) {
                const double a = iv.lo + h * k;
                pi[k] = std::max(0.0, best.values[k] + eps * std::exp(-0.5 * (a - c) * (a - c) / (width * width)) -
                                          0.5 * eps * rng.uniform() * best.values[k]);
                mass += wts[k] * pi[k];
            }
            for (auto& v : pi) v /= mass;
            worst_margin = std::min(worst_margin, f0 - objective(pi));
        }
    }
    return {"order-2 maximizer beats perturbations", worst_margin >= 0.0, "min margin " + fmt(worst_margin)};
}

inline CheckResult gibbs_limit() {
    const ActionInterval iv{};
    auto q = [](double a) { return -0.3 * (a - 1.0) * (a - 1.0); };
    const GridDensity g = gibbs_density(q, 0.5, iv), t = tsallis_improvement_density(q, 1.001, 0.5, iv);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.values.size(); ++k) worst = std::max(worst, std::abs(g.values[k] - t.values[k]));
    return {"order p -> 1 limit matches Gibbs density", worst <= 1e-2, "sup gap " + fmt(worst)};
}

inline CheckResult regime_chain_law(int steps) {
    MarketParams m{{0.0, 0.0}, {0.2, 0.2}, {0.0, 0.0}, {-1.0, 1.0, 1.0, -1.0}};
    const double dt = 0.04;
    const RegimeChain chain(m, dt);
    Stream rng(15, 1);
    int i = 0, switches = 0;
    for (int n = 0; n < steps; ++n) {
        const int j = chain.step(i, rng);
        switches += j != i;
        i = j;
    }
    const double p = 0.5 * (1.0 - std::exp(-2.0 * dt));
    const double z = (switches - steps * p) / std::sqrt(steps * p * (1.0 - p));
    return {"regime switch frequency", std::abs(z) <= 3.0, "z = " + fmt(z)};
}

}  // namespace verify

/// Cross-module oracle battery. Prints one line per item; returns every result.
inline std::vector<CheckResult> verify_suite(VerifyLevel level, std::ostream& out = std::cout) {
    const bool full = level == VerifyLevel::full;
    const LearningConfig p1 = preset_emv_p1(), p2 = preset_emv_p2();
    std::vector<std::function<CheckResult()>> items = {
        [] { return verify::expm_series(); },
        [] { return verify::single_regime_closed_forms(); },
        [&] { return verify::grid_doubling(p1); },
        [&] { return verify::grid_doubling(p2); },
        [&] { return verify::derivative_consistency(p1); },
        [] { return verify::policy_normalization(); },
        [full] { return verify::sampler_moments(full ? 1000000 : 100000); },
        [full] { return verify::regime_chain_law(full ? 1000000 : 200000); },
        [] { return verify::gibbs_limit(); },
        [full, &p1] { return verify::martingale(p1, 1.0, full ? 10000 : 4000); },
        [full, &p2] { return verify::martingale(p2, 1.0, full ? 10000 : 4000); },
        [&] { return verify::martingale(p1, 1.5, 10000); },
        [&] { return verify::martingale(p2, 1.5, 10000); },
        [&] { return verify::fd_stability(p1); },
        [&] { return verify::fd_stability(p2); },
        [] { return verify::lemma_maximizer(); },
    };
    std::vector<CheckResult> results;
    for (auto& item : items) {
        CheckResult r;
        try {
            r = item();
        } catch (const std::exception& e) {
            r = {"(check threw)", false, e.what()};
        }
        out << (r.passed ? "PASS " : "FAIL ") << r.name << "  [" << r.detail << "]\n" << std::flush;
        results.push_back(r);
    }
    return results;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace regime_q
