// cwp: curvature toolkit for base conformal warped products.
//
// Subcommands: curvature, sbcwp, classify, tables, einstein, verify, geodesic.
// All outputs are deterministic for a fixed seed; numbers are printed with
// locale-independent formatting.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cwp/chart_spec.hpp"
#include "cwp/classify.hpp"
#include "cwp/einstein.hpp"
#include "cwp/opfamilies.hpp"
#include "cwp/sbcwp.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_out(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    out << text;
}

struct CheckLine {
    std::string quantity;
    double formula = 0.0;
    double oracle = 0.0;
    double discrepancy = 0.0;
    double tolerance = 0.0;
    bool pass() const { return discrepancy <= tolerance; }
};

int report(std::ostream& os, const std::vector<CheckLine>& lines) {
    int failures = 0;
    for (const auto& l : lines) {
        os << l.quantity << " | formula " << fmt(l.formula) << " | oracle " << fmt(l.oracle)
           << " | max-discrepancy " << fmt(l.discrepancy) << " | tolerance " << fmt(l.tolerance)
           << " | " << (l.pass() ? "PASS" : "FAIL") << "\n";
        if (!l.pass()) ++failures;
    }
    return failures;
}

double interior_value(const cwp::ScalarField& f) {
    const auto& g = f.grid();
    std::vector<int> idx(g.dim());
    for (int a = 0; a < g.dim(); ++a) idx[a] = g.axis(a).count / 2;
    return f[g.flatten(idx)];
}

// ---- verify suites ----------------------------------------------------------

std::vector<CheckLine> verify_geometry() {
    using namespace cwp;
    std::vector<CheckLine> out;

    GridPtr sg = make_grid({Axis{"th", 1.0, 1e-3, 9}, Axis{"ph", 0.0, 1e-3, 9}});
    MetricField sphere(sg, {1, 1});
    for (std::size_t n = 0; n < sg->node_count(); ++n) {
        std::vector<double> x(2);
        sg->coordinates(n, x);
        sphere.set(n, 0, 0, 1.0);
        sphere.set(n, 1, 1, std::sin(x[0]) * std::sin(x[0]));
    }
    ScalarField s = scalar_curvature(sphere);
    double worst = 0.0;
    detail::for_each_valid(*sg, s.margins(), [&](std::size_t n) {
        worst = std::max(worst, std::abs(s[n] - 2.0));
    });
    out.push_back({"unit-sphere scalar curvature", interior_value(s), 2.0, worst, 1e-4});
    return out;
}

std::vector<CheckLine> verify_opfamilies(unsigned seed, int count) {
    using namespace cwp;
    std::vector<CheckLine> out;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);

    GridPtr g = make_grid({Axis{"x", 0.0, 0.02, 11}, Axis{"y", 0.0, 0.02, 11}});
    MetricField flat(g, {1, 1});
    for (std::size_t n = 0; n < g->node_count(); ++n) {
        flat.set(n, 0, 0, 1.0);
        flat.set(n, 1, 1, 1.0);
    }
    ScalarField v = ScalarField::sample(g, [](std::span<const double> x) {
        return 1.0 + 0.2 * std::sin(x[0]) * std::cos(x[1]);
    });

    int done = 0;
    while (done < count) {
        OpFamily fam({{coef(rng), coef(rng)}, {coef(rng), coef(rng)}});
        ReducedForm rf = reduce(fam);
        if (!rf.valid || std::abs(rf.alpha) < 0.25) continue;
        ++done;
        OpFamilyEval ev = eval_L(fam, flat, v);
        double scale = std::max(1.0, ev.closed.max_abs_interior());
        double d = max_abs_diff_interior(ev.literal, ev.reduced);
        out.push_back({"op-family " + std::to_string(done) + " literal-vs-reduced",
                       interior_value(ev.literal), interior_value(ev.reduced), d,
                       fd_tolerance(0.02, scale)});
    }
    return out;
}

std::vector<CheckLine> verify_bcwp(unsigned seed, int specs, int order, double h) {
    using namespace cwp;
    std::vector<CheckLine> out;
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> dim(1, 2);
    std::uniform_real_distribution<double> amp(0.05, 0.25);
    std::uniform_real_distribution<double> phase(0.0, 6.28);

    for (int i = 0; i < specs; ++i) {
        int m = dim(rng), k = dim(rng);
        std::vector<Axis> ba, fa;
        for (int a = 0; a < m; ++a) ba.push_back(Axis{"b" + std::to_string(a), 0.1, h, 9});
        for (int a = 0; a < k; ++a) fa.push_back(Axis{"f" + std::to_string(a), 0.2, h, 9});
        GridPtr bg = make_grid(ba), fg = make_grid(fa);

        auto rand_metric = [&](GridPtr grid) {
            int n = grid->dim();
            std::vector<double> aa(n), pp(n);
            for (int j = 0; j < n; ++j) {
                aa[j] = amp(rng);
                pp[j] = phase(rng);
            }
            MetricField mtr(grid, std::vector<int>(n, 1));
            for (std::size_t node = 0; node < grid->node_count(); ++node) {
                std::vector<double> x(n);
                grid->coordinates(node, x);
                for (int j = 0; j < n; ++j)
                    mtr.set(node, j, j,
                            1.0 + aa[j] * std::sin(x[j % n] + pp[j] + 0.3 * x[(j + 1) % n]));
            }
            return mtr;
        };
        auto rand_positive = [&](GridPtr grid) {
            double a = amp(rng), p = phase(rng);
            return ScalarField::sample(grid, [=](std::span<const double> x) {
                double arg = x[0] + p;
                if (x.size() > 1) arg += 0.7 * x[1];
                return 1.0 + a * std::sin(arg);
            });
        };

        BcwpSpec spec(rand_metric(bg), rand_metric(fg), rand_positive(bg), rand_positive(bg));
        MetricField product = assemble(spec);
        double tol = (order == 4) ? 1e-5 : 1e-3;
        std::string tag = "spec " + std::to_string(i) + " (m=" + std::to_string(m) +
                          ",k=" + std::to_string(k) + ") ";

        {
            TensorField f = bcwp_connection(spec, order);
            TensorField o = christoffel(product, order);
            out.push_back({tag + "connection", f.max_abs_interior(), o.max_abs_interior(),
                           max_abs_diff_interior(f, o), tol});
        }
        {
            TensorField f = bcwp_riemann(spec, order);
            TensorField o = riemann(product, order);
            out.push_back({tag + "riemann", f.max_abs_interior(), o.max_abs_interior(),
                           max_abs_diff_interior(f, o), tol});
        }
        {
            TensorField f = bcwp_ricci(spec, order);
            TensorField o = ricci(product, order);
            out.push_back({tag + "ricci", f.max_abs_interior(), o.max_abs_interior(),
                           max_abs_diff_interior(f, o), tol});
        }
        {
            ScalarField f = bcwp_scalar(spec, order);
            ScalarField o = scalar_curvature(product, order);
            out.push_back({tag + "scalar", interior_value(f), interior_value(o),
                           max_abs_diff_interior(f, o), tol});
        }
        {
            ScalarField phi = rand_positive(bg);
            TensorField f = bcwp_hessian_base(spec, phi, order);
            TensorField o = hessian(product, lift_base(spec, phi), order);
            out.push_back({tag + "hessian", f.max_abs_interior(), o.max_abs_interior(),
                           max_abs_diff_interior(f, o), tol});
            ScalarField lf = bcwp_laplacian_base(spec, phi, order);
            ScalarField lo = laplace_beltrami(product, lift_base(spec, phi), order);
            out.push_back({tag + "laplacian", interior_value(lf), interior_value(lo),
                           max_abs_diff_interior(lf, lo), tol});
            TensorField gf = bcwp_gradient(spec, phi, order);
            TensorField go = gradient(product, lift_base(spec, phi), order);
            out.push_back({tag + "gradient", gf.max_abs_interior(), go.max_abs_interior(),
                           max_abs_diff_interior(gf, go), tol});
        }
    }
    return out;
}

std::vector<CheckLine> verify_sbcwp(unsigned seed) {
    using namespace cwp;
    std::vector<CheckLine> out;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> mus(-2.5, 2.5);

    GridPtr bg = make_grid({Axis{"x", 0.0, 0.02, 9}, Axis{"y", 0.0, 0.02, 9}});
    GridPtr fg = make_grid({Axis{"th", 1.0, 0.02, 9}, Axis{"ph", 0.0, 0.02, 9}});
    MetricField base(bg, {1, 1});
    for (std::size_t n = 0; n < bg->node_count(); ++n) {
        base.set(n, 0, 0, 1.0);
        base.set(n, 1, 1, 1.0);
    }
    MetricField fiber(fg, {1, 1});
    for (std::size_t n = 0; n < fg->node_count(); ++n) {
        std::vector<double> x(2);
        fg->coordinates(n, x);
        fiber.set(n, 0, 0, 1.0);
        fiber.set(n, 1, 1, std::sin(x[0]) * std::sin(x[0]));
    }
    ScalarField psi = ScalarField::sample(bg, [](std::span<const double> x) {
        return std::exp(0.1 * x[0]);
    });

    for (int i = 0; i < 3; ++i) {
        double mu = mus(rng);
        RicciResidual r = ricci_residual(base, fiber, psi, mu);
        out.push_back({"sbcwp ricci unreduced (mu=" + fmt(mu) + ")", 0.0, 0.0,
                       std::max(r.base_unreduced, r.fiber_unreduced), fd_tolerance(0.02, 10.0)});
        ScalarField S = oracle_scalar_on_base(base, fiber, psi, mu);
        ScalarResidual sr = scalar_residual(base, 2, 2.0, psi, mu, S);
        out.push_back({"sbcwp scalar " + branch_name(sr.branch) + " (mu=" + fmt(mu) + ")", 0.0,
                       0.0, sr.max_branch_residual, fd_tolerance(0.02, 30.0)});
    }
    return out;
}

// ---- subcommand payloads ------------------------------------------------------

int run_curvature(const std::string& spec_path, const std::string& what, bool verify, int order,
                  double tolerance, const std::string& out_path) {
    using namespace cwp;
    ChartSpec chart = load_chart_spec(spec_path);
    std::ostringstream os;
    os << "# cwp " << kVersion << " | curvature | what=" << what << " | order=" << order << "\n";
    auto tol = [&](double scale) {
        return tolerance > 0.0 ? tolerance : fd_tolerance(chart.metric.grid().min_spacing(), scale);
    };

    std::vector<CheckLine> checks;
    if (chart.bcwp && verify) {
        const BcwpSpec& spec = *chart.bcwp;
        if (what == "connection") {
            TensorField f = bcwp_connection(spec, order);
            TensorField o = christoffel(chart.metric, order);
            checks.push_back({"connection", f.max_abs_interior(), o.max_abs_interior(),
                              max_abs_diff_interior(f, o),
                              tol(10.0)});
        } else if (what == "riemann") {
            TensorField f = bcwp_riemann(spec, order);
            TensorField o = riemann(chart.metric, order);
            checks.push_back({"riemann", f.max_abs_interior(), o.max_abs_interior(),
                              max_abs_diff_interior(f, o),
                              tol(20.0)});
        } else if (what == "ricci") {
            TensorField f = bcwp_ricci(spec, order);
            TensorField o = ricci(chart.metric, order);
            checks.push_back({"ricci", f.max_abs_interior(), o.max_abs_interior(),
                              max_abs_diff_interior(f, o),
                              tol(20.0)});
        } else if (what == "scalar") {
            ScalarField f = lift_base(spec, bcwp_scalar_base(spec, order));
            ScalarField o = scalar_curvature(chart.metric, order);
            checks.push_back({"scalar", interior_value(f), interior_value(o),
                              max_abs_diff_interior(f, o),
                              tol(30.0)});
        } else {
            throw DomainError("curvature: unknown --what " + what);
        }
        int failures = report(os, checks);
        write_out(os.str(), out_path);
        return failures == 0 ? 0 : 1;
    }

    // plain chart (or --verify omitted): evaluate the oracle quantity
    if (what == "scalar") {
        ScalarField s = scalar_curvature(chart.metric, order);
        os << "scalar curvature at central interior node: " << fmt(interior_value(s)) << "\n";
        os << "max |S| over interior: " << fmt(s.max_abs_interior()) << "\n";
    } else if (what == "ricci") {
        TensorField r = ricci(chart.metric, order);
        os << "max |Ric| over interior: " << fmt(r.max_abs_interior()) << "\n";
    } else if (what == "riemann") {
        TensorField r = riemann(chart.metric, order);
        os << "max |Riem| over interior: " << fmt(r.max_abs_interior()) << "\n";
    } else if (what == "connection") {
        TensorField c = christoffel(chart.metric, order);
        os << "max |Gamma| over interior: " << fmt(c.max_abs_interior()) << "\n";
    } else {
        throw DomainError("curvature: unknown --what " + what);
    }
    write_out(os.str(), out_path);
    return 0;
}

int run_sbcwp(int m, int k, const std::string& mu_text, bool exact, const std::string& out_path) {
    using namespace cwp;
    std::ostringstream os;
    os << "# cwp " << kVersion << " | sbcwp | m=" << m << " k=" << k << " mu=" << mu_text << "\n";

    if (exact) {
        Rational mu = Rational::parse(mu_text);
        CoefficientSet<Rational> cs = coefficients_exact(m, k, mu);
        auto pr = [&](const char* name, const CoefficientPair<Rational>& p) {
            os << name << ": zeta=" << p.zeta << " eta=" << p.eta;
            if (p.valid) os << " alpha=" << p.alpha << " beta=" << p.beta;
            else os << " (reduced form undefined)";
            os << "\n";
        };
        pr("scalar", cs.scalar);
        pr("hessian", cs.hess);
        pr("laplacian", cs.lap);
        pr("trace", cs.trace);
        if (cs.pq_valid) os << "p=" << cs.p << " q=" << cs.q << "\n";
    } else {
        double mu = std::stod(mu_text);
        CoefficientSet<double> cs = coefficients({m, k, mu});
        auto pd = [&](const char* name, const CoefficientPair<double>& p) {
            os << name << ": zeta=" << fmt(p.zeta) << " eta=" << fmt(p.eta);
            if (p.valid) os << " alpha=" << fmt(p.alpha) << " beta=" << fmt(p.beta);
            else os << " (reduced form undefined)";
            os << "\n";
        };
        pd("scalar", cs.scalar);
        pd("hessian", cs.hess);
        pd("laplacian", cs.lap);
        pd("trace", cs.trace);
        if (cs.pq_valid) os << "p=" << fmt(cs.p) << " q=" << fmt(cs.q) << "\n";
        if (cs.near_exceptional) os << "warning: mu is within 1e-9 of an exceptional value\n";
    }

    if (exact) {
        if (auto note = published_value_note(m, k, Rational::parse(mu_text))) os << *note << "\n";
    }
    ExceptionalSet exc = exceptional_mus(m, k);
    os << "exceptional mu (Ricci relation):";
    for (double e : exc.ricci) os << " " << fmt(e);
    os << "\n";
    os << "exceptional mu (scalar relation): " << exc.scalar_exceptional << "\n";
    double mu_d = exact ? Rational::parse(mu_text).to_double() : std::stod(mu_text);
    os << "scalar branch: " << branch_name(select_scalar_branch(m, k, mu_d)) << "\n";
    write_out(os.str(), out_path);
    return 0;
}

int run_classify(int m, int k, const std::string& mu_text, const std::string& out_path) {
    using namespace cwp;
    Rational mu = Rational::parse(mu_text);
    RegimeRow row = regime(m, k, mu);
    std::ostringstream os;
    os << "# cwp " << kVersion << " | classify | m=" << m << " k=" << k << " mu=" << mu << "\n";
    os << render_rows_csv({row}, "single row");
    if (auto note = published_value_note(m, k, mu)) os << *note << "\n";
    write_out(os.str(), out_path);
    return 0;
}

int run_tables(const std::string& which, const std::string& format, const std::string& out_path) {
    using namespace cwp;
    std::ostringstream os;
    if (which == "D0") {
        auto d0 = enumerate_D0(100, 100);
        if (format == "md") {
            os << "### zero-discriminant pairs (2 <= m,k <= 100)\n\n| m | k | discriminant |\n|---|---|---|\n";
            for (auto [m, k] : d0)
                os << "| " << m << " | " << k << " | " << membership_D(m, k).discriminant << " |\n";
        } else {
            os << "# cwp " << kVersion << " | table D0 | 2 <= m <= 100, 1 <= k <= 100\n";
            os << "m,k,discriminant\n";
            for (auto [m, k] : d0)
                os << m << ',' << k << ',' << membership_D(m, k).discriminant << "\n";
        }
        write_out(os.str(), out_path);
        return 0;
    }
    int which_n = std::stoi(which);
    std::vector<RegimeRow> rows = table_rows(which_n);
    std::string header = table_header(which_n);
    std::string text;
    if (format == "md") {
        text = render_rows_md(rows, header);
    } else if (format == "json") {
        nlohmann::json j;
        j["header"] = header;
        for (const auto& r : rows) {
            nlohmann::json row;
            row["m"] = r.m;
            row["k"] = r.k;
            row["mu"] = r.mu.str();
            row["interval"] = r.interval;
            if (!r.excluded) {
                row["alpha"] = r.alpha.str();
                row["beta"] = r.beta.str();
                row["p"] = r.p.str();
                row["q"] = r.q.str();
            }
            row["ordering"] = r.ordering;
            row["label"] = r.label;
            if (!r.note.empty()) row["note"] = r.note;
            j["rows"].push_back(row);
        }
        text = j.dump(2) + "\n";
    } else {
        text = render_rows_csv(rows, header);
    }
    write_out(text, out_path);
    return 0;
}

int run_einstein_m1(int k, double nu, double lambda, double mu, const std::string& sign,
                    double gamma, double v0, double r0, double r1, const std::string& out_path) {
    using namespace cwp;
    int s = (sign == "-") ? -1 : 1;
    std::ostringstream os;
    os << "# cwp " << kVersion << " | einstein m1 | k=" << k << " nu=" << fmt(nu)
       << " lambda=" << fmt(lambda) << " mu=" << fmt(mu) << " sign=" << sign << "\n";

    EinsteinSolution sol;
    if (k == 1) {
        // constant-lambda double integral on [r0, r1]
        int nsamp = 501;
        double h = (r1 - r0) / (nsamp - 1);
        std::vector<double> lam(nsamp, lambda);
        sol = k1_profile(lam, r0, h, s, 0.0, v0 > 0 ? v0 : 1.0);
    } else if (mu == -1.0 && lambda != 0.0 && v0 <= 0.0) {
        sol = closed_form_mu_minus1(k, nu, lambda, gamma, s);
    } else {
        EinsteinProblem prob{k, nu, lambda, s, mu};
        sol = solve_quadrature(prob, v0, r0, r1);
    }

    os << "kind=" << static_cast<int>(sol.kind) << " positive=[" << fmt(sol.positive_lo) << ","
       << fmt(sol.positive_hi) << "] max-residual=" << fmt(sol.max_residual) << "\n";
    os << "r,v\n";
    for (std::size_t i = 0; i < sol.r.size(); ++i)
        os << fmt(sol.r[i]) << ',' << fmt(sol.profile[i]) << "\n";
    write_out(os.str(), out_path);
    return 0;
}

int run_einstein_schwarzschild(int k, const std::string& lambda, const std::string& nu,
                               const std::string& C, const std::string& out_path) {
    using namespace cwp;
    SchwarzschildSolution sol = schwarzschild_general(k, Rational::parse(lambda),
                                                      Rational::parse(nu), Rational::parse(C));
    std::ostringstream os;
    os << "# cwp " << kVersion << " | einstein schwarzschild | k=" << k << " lambda=" << lambda
       << " nu=" << nu << " C=" << C << "\n";
    os << "euler-residual-exact-zero=" << (sol.euler_residual_zero ? "yes" : "no") << "\n";
    os << "first-order-residual-exact-zero=" << (sol.first_order_residual_zero ? "yes" : "no")
       << "\n";
    os << "max-numeric-residual=" << fmt(sol.max_numeric_residual) << "\n";
    os << "r,u2\n";
    for (int i = 0; i <= 100; ++i) {
        double r = 3.0 + 2.0 * i / 100.0;
        os << fmt(r) << ',' << fmt(sol.u2.eval(r)) << "\n";
    }
    write_out(os.str(), out_path);
    return sol.euler_residual_zero && sol.first_order_residual_zero ? 0 : 1;
}

int run_einstein_nested(double M, double h, bool riemannian, const std::string& out_path) {
    using namespace cwp;
    std::ostringstream os;
    os << "# cwp " << kVersion << " | einstein check-nested | M=" << fmt(M) << " h=" << fmt(h)
       << (riemannian ? " riemannian" : " lorentzian") << "\n";

    long long Mnum = static_cast<long long>(M * 1024.0);
    Rational Mr(Mnum, 1024);
    SchwarzschildSolution sol =
        riemannian ? schwarzschild_general(2, Rational(-3), Rational(1), Rational(-2) * Mr)
                   : schwarzschild_general(2, Rational(0), Rational(1), Rational(-2) * Mr);
    double lambda = riemannian ? -3.0 : 0.0;
    NestedCheck chk = nested_bcwp_check(sol.u2, lambda, riemannian ? 1 : -1, 3.0, 5.0, h);
    os << "metric-mismatch=" << fmt(chk.metric_mismatch) << "\n";
    os << "ricci-residual=" << fmt(chk.ricci_residual) << "\n";
    bool pass = chk.metric_mismatch < 1e-12 && chk.ricci_residual < 1e-3;
    os << (pass ? "PASS" : "FAIL") << "\n";
    write_out(os.str(), out_path);
    return pass ? 0 : 1;
}

int run_geodesic(const std::string& spec_path, std::vector<double> base0,
                 std::vector<double> fiber0, std::vector<double> vbase0,
                 std::vector<double> vfiber0, double step, int steps,
                 const std::string& out_path) {
    using namespace cwp;
    ChartSpec chart = load_chart_spec(spec_path);
    if (!chart.functions) throw DomainError("geodesic: spec must be a bcwp chart");
    const BcwpFunctions& fns = *chart.functions;
    if (step <= 0.0) step = chart.metric.grid().min_spacing() / 4.0;

    GeodesicResult res = geodesic_integrate(fns, base0, fiber0, vbase0, vfiber0, step, steps);
    // domain guard: the trajectory must stay inside the chart box
    const ChartGrid& pg = chart.metric.grid();
    for (const auto& pt : res.base_points)
        for (int a = 0; a < fns.m; ++a) {
            double lo = pg.axis(a).origin;
            double hi = pg.axis(a).origin + (pg.axis(a).count - 1) * pg.axis(a).spacing;
            if (pt[a] < lo || pt[a] > hi) throw DomainError("geodesic: trajectory exits grid domain");
        }

    std::ostringstream os;
    os << "# cwp " << kVersion << " | geodesic | step=" << fmt(step) << " steps=" << steps << "\n";
    os << "max-base-residual=" << fmt(res.max_base_residual) << "\n";
    os << "max-fiber-residual=" << fmt(res.max_fiber_residual) << "\n";
    os << "max-pregeodesic-defect=" << fmt(res.max_pregeodesic_defect) << "\n";
    os << "t";
    for (int a = 0; a < fns.m; ++a) os << ",b" << a;
    for (int a = 0; a < fns.k; ++a) os << ",f" << a;
    os << "\n";
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        os << fmt(res.times[i]);
        for (int a = 0; a < fns.m; ++a) os << ',' << fmt(res.base_points[i][a]);
        for (int a = 0; a < fns.k; ++a) os << ',' << fmt(res.fiber_points[i][a]);
        os << "\n";
    }
    write_out(os.str(), out_path);
    return 0;
}

int run_verify(const std::string& suite, unsigned seed, int specs, int order, double spacing,
               const std::string& out_path) {
    std::ostringstream os;
    os << "# cwp " << kVersion << " | verify | suite=" << suite << " seed=" << seed
       << " specs=" << specs << " order=" << order << " spacing=" << fmt(spacing) << "\n";
    std::vector<CheckLine> lines;
    auto append = [&](std::vector<CheckLine> v) {
        lines.insert(lines.end(), v.begin(), v.end());
    };
    if (suite == "geometry" || suite == "all") append(verify_geometry());
    if (suite == "opfamilies" || suite == "all") append(verify_opfamilies(seed, 8));
    if (suite == "bcwp" || suite == "all") append(verify_bcwp(seed + 1, specs, order, spacing));
    if (suite == "sbcwp" || suite == "all") append(verify_sbcwp(seed + 2));
    int failures = report(os, lines);
    os << (failures == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failures)) << "\n";
    write_out(os.str(), out_path);
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvature toolkit for base conformal warped products"};
    app.require_subcommand(1);

    std::string out_path;
    app.add_option("--out", out_path, "write output to a file instead of stdout");

    // curvature
    auto* cur = app.add_subcommand("curvature", "curvature of a chart-spec metric");
    std::string spec_path, what = "scalar";
    bool verify_flag = false;
    int order = 2;
    cur->add_option("--spec", spec_path, "chart spec JSON")->required();
    cur->add_option("--what", what, "connection|riemann|ricci|scalar");
    cur->add_flag("--verify", verify_flag, "compare block formulas against the grid oracle");
    cur->add_option("--order", order, "stencil order (2 or 4)");
    double cur_tolerance = 0.0;
    cur->add_option("--tolerance", cur_tolerance, "override the FD tolerance for --verify");

    // sbcwp
    auto* sb = app.add_subcommand("sbcwp", "coefficient set for (m,k,mu)");
    int m = 2, k = 1;
    std::string mu_text = "0";
    bool exact = false;
    sb->add_option("--m", m)->required();
    sb->add_option("--k", k)->required();
    sb->add_option("--mu", mu_text)->required();
    sb->add_flag("--exact", exact, "rational arithmetic (mu as P/Q)");

    // classify
    auto* cl = app.add_subcommand("classify", "nonlinearity regime of (m,k,mu)");
    cl->add_option("--m", m)->required();
    cl->add_option("--k", k)->required();
    cl->add_option("--mu", mu_text, "rational P/Q")->required();
    cl->add_flag("--exact", exact, "(always exact; flag accepted for symmetry)");

    // tables
    auto* tb = app.add_subcommand("tables", "emit a regime table or the D0 set");
    std::string which = "D0", format = "csv";
    tb->add_option("--which", which, "4|5|6|7|8|D0")->required();
    tb->add_option("--format", format, "csv|md");

    // einstein
    auto* ein = app.add_subcommand("einstein", "Einstein-condition solvers");
    ein->require_subcommand(1);
    auto* m1 = ein->add_subcommand("m1", "interval base profiles");
    double nu = 0.0, lambda = 0.0, mu_d = -1.0, gamma = 0.0, v0 = 0.0, r0 = 0.0, r1 = 1.0;
    std::string sign = "+";
    m1->add_option("--k", k)->required();
    m1->add_option("--nu", nu);
    m1->add_option("--lambda", lambda);
    m1->add_option("--mu", mu_d);
    m1->add_option("--sign", sign, "+ or -");
    m1->add_option("--gamma", gamma);
    m1->add_option("--v0", v0, "start value for the quadrature branch");
    m1->add_option("--r0", r0);
    m1->add_option("--r1", r1);

    auto* sch = ein->add_subcommand("schwarzschild", "generalized family, m = 2");
    std::string lam_text = "0", nu_text = "1", C_text = "-2";
    sch->add_option("--k", k)->required();
    sch->add_option("--lambda", lam_text);
    sch->add_option("--nu", nu_text);
    sch->add_option("--C", C_text);

    auto* nested = ein->add_subcommand("check-nested", "two-stage product assembly check");
    double M = 1.0, h = 0.01;
    bool riemannian = false;
    nested->add_option("--M", M)->required();
    nested->add_option("--spacing", h, "radial resolution in r terms");
    nested->add_flag("--riemannian", riemannian);

    // verify
    auto* ver = app.add_subcommand("verify", "randomized verification report");
    std::string suite = "all";
    unsigned seed = 7;
    ver->add_option("--suite", suite, "geometry|opfamilies|bcwp|sbcwp|all");
    ver->add_option("--seed", seed);
    int verify_specs = 4;
    int verify_order = 2;
    double verify_spacing = 0.02;
    ver->add_option("--specs", verify_specs, "randomized bcwp spec count");
    ver->add_option("--order", verify_order, "stencil order for the bcwp suite");
    ver->add_option("--spacing", verify_spacing, "grid spacing for the bcwp suite");

    // geodesic
    auto* geo = app.add_subcommand("geodesic", "integrate the product geodesic equations");
    std::vector<double> base0, fiber0, vbase0, vfiber0;
    double step = 0.0;
    int steps = 100;
    geo->add_option("--spec", spec_path, "bcwp chart spec JSON")->required();
    geo->add_option("--base", base0, "initial base point")->required();
    geo->add_option("--fiber", fiber0, "initial fiber point")->required();
    geo->add_option("--vbase", vbase0, "initial base velocity")->required();
    geo->add_option("--vfiber", vfiber0, "initial fiber velocity")->required();
    geo->add_option("--step", step, "default: min spacing / 4");
    geo->add_option("--steps", steps);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cur) return run_curvature(spec_path, what, verify_flag, order, cur_tolerance, out_path);
        if (*sb) return run_sbcwp(m, k, mu_text, exact, out_path);
        if (*cl) return run_classify(m, k, mu_text, out_path);
        if (*tb) return run_tables(which, format, out_path);
        if (*m1) return run_einstein_m1(k, nu, lambda, mu_d, sign, gamma, v0, r0, r1, out_path);
        if (*sch) return run_einstein_schwarzschild(k, lam_text, nu_text, C_text, out_path);
        if (*nested) return run_einstein_nested(M, h, riemannian, out_path);
        if (*ver) return run_verify(suite, seed, verify_specs, verify_order, verify_spacing, out_path);
        if (*geo)
            return run_geodesic(spec_path, base0, fiber0, vbase0, vfiber0, step, steps, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
