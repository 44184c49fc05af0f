#include "cwp/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cwp {

std::string exponent_type_name(ExponentType t) {
    switch (t) {
        case ExponentType::SuperLin: return "super-lin";
        case ExponentType::SubLin: return "sub-lin";
        case ExponentType::NonHom: return "non-hom";
        case ExponentType::Sing: return "sing";
        case ExponentType::Lin: return "lin";
    }
    return "?";
}

ExponentType classify_exponent(const Rational& e) {
    if (e > Rational(1)) return ExponentType::SuperLin;
    if (e == Rational(1)) return ExponentType::Lin;
    if (e > Rational(0)) return ExponentType::SubLin;
    if (e == Rational(0)) return ExponentType::NonHom;
    return ExponentType::Sing;
}

PqResult pq(int m, int k, const Rational& mu) {
    if (m < 1 || k < 1) throw DomainError("pq: need m >= 1, k >= 1");
    CoefficientSet<Rational> cs = coefficients_exact(m, k, mu);
    if (!cs.scalar.valid) throw DomainError("pq: mu is scalar-exceptional for (m,k)");
    return PqResult{cs.scalar.alpha, cs.scalar.beta, cs.p, cs.q};
}

MembershipD membership_D(int m, int k) {
    if (m < 2 || k < 1) throw DomainError("membership_D: need m >= 2, k >= 1");
    long long a = static_cast<long long>(m - 2) * k - 4LL * (m - 1);
    long long discr = -4LL * a * (k + m - 1);
    MembershipD out;
    out.discriminant = discr;
    out.in_D = discr < 0;
    out.on_D0 = discr == 0;
    return out;
}

std::vector<std::pair<int, int>> enumerate_D0(int m_max, int k_max) {
    std::vector<std::pair<int, int>> out;
    for (int m = 2; m <= m_max; ++m)
        for (int k = 1; k <= k_max; ++k)
            if (membership_D(m, k).on_D0) out.emplace_back(m, k);
    return out;
}

namespace {

std::optional<long long> integer_sqrt(long long v) {
    if (v < 0) return std::nullopt;
    long long r = static_cast<long long>(std::sqrt(static_cast<double>(v)));
    for (long long c = std::max(0LL, r - 2); c <= r + 2; ++c)
        if (c * c == v) return c;
    return std::nullopt;
}

} // namespace

QRoots q_roots(int m, int k) {
    MembershipD d = membership_D(m, k);
    if (d.in_D) throw DomainError("q_roots: (m,k) in D, roots are complex");
    long long A = static_cast<long long>(m - 1) * (m + 2);
    long long B = 2LL * (static_cast<long long>(m) * k - 2LL * (m - 1));
    // discriminant of rho equals B^2 - 4 A C with C = (k-3)k
    long long discr = d.discriminant;
    QRoots out;
    double sq = std::sqrt(static_cast<double>(discr));
    out.mu_minus = (-static_cast<double>(B) - sq) / (2.0 * A);
    out.mu_plus = (-static_cast<double>(B) + sq) / (2.0 * A);
    out.double_root = (discr == 0);
    if (auto s = integer_sqrt(discr)) {
        out.mu_minus_exact = Rational(-B - *s, 2 * A);
        out.mu_plus_exact = Rational(-B + *s, 2 * A);
    }
    return out;
}

namespace {

struct Breakpoint {
    double approx;
    std::string text;
    std::optional<Rational> exact;
};

std::string format_approx(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<Breakpoint> breakpoints_for(int m, int k) {
    std::vector<Breakpoint> bp;
    auto push_rational = [&](const Rational& r) {
        for (const auto& b : bp)
            if (b.exact && *b.exact == r) return;
        bp.push_back({r.to_double(), r.str(), r});
    };
    if (m >= 2) {
        push_rational(Rational(-k, m - 1));
        push_rational(Rational(0));
        push_rational(Rational(1));
        MembershipD d = membership_D(m, k);
        if (!d.in_D) {
            QRoots roots = q_roots(m, k);
            if (roots.mu_minus_exact) {
                push_rational(*roots.mu_minus_exact);
                if (!roots.double_root) push_rational(*roots.mu_plus_exact);
            } else {
                bp.push_back({roots.mu_minus, format_approx(roots.mu_minus), std::nullopt});
                if (!roots.double_root)
                    bp.push_back({roots.mu_plus, format_approx(roots.mu_plus), std::nullopt});
            }
        }
    } else {
        Rational k1(k + 1, 2);
        push_rational(-k1);
        push_rational(Rational(2) - k1);
        push_rational(Rational(0));
        push_rational(Rational(1));
        push_rational(k1);
    }
    std::sort(bp.begin(), bp.end(), [](const Breakpoint& a, const Breakpoint& b) {
        return a.approx < b.approx;
    });
    return bp;
}

std::string point_ordering(const Rational& p, const Rational& q, bool q_suppressed) {
    if (q_suppressed) return "p=" + p.str();
    if (q < p) return "q=" + q.str() + "<p=" + p.str();
    return "p=" + p.str() + "<q=" + q.str();
}

// Interval-cell ordering pattern: exponent symbols with the 0/1 markers the
// positions call for.
std::string interval_ordering(const Rational& p, const Rational& q, bool q_suppressed) {
    struct Entry {
        Rational v;
        std::string text;
    };
    std::vector<Entry> entries;
    if (!q_suppressed) entries.push_back({q, "q"});
    entries.push_back({p, "p"});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.v < b.v; });

    Rational lo = entries.front().v, hi = entries.back().v;
    std::vector<Entry> full = entries;
    // 0 and 1 markers: inline when strictly between the exponents, otherwise
    // the nearest bound on the outside.
    if (lo > Rational(1)) full.push_back({Rational(1), "1"});
    else if (lo > Rational(0)) full.push_back({Rational(0), "0"});
    if (lo < Rational(0) && hi > Rational(0)) full.push_back({Rational(0), "0"});
    if (lo < Rational(1) && hi > Rational(1)) full.push_back({Rational(1), "1"});
    if (hi < Rational(0)) full.push_back({Rational(0), "0"});
    else if (hi < Rational(1)) full.push_back({Rational(1), "1"});

    std::sort(full.begin(), full.end(), [](const Entry& a, const Entry& b) { return a.v < b.v; });
    std::string out;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (i) out += full[i].v == full[i - 1].v ? "=" : "<";
        out += full[i].text;
    }
    return out;
}

std::string regime_label(const Rational& p, const Rational& q, bool q_suppressed) {
    ExponentType tp = classify_exponent(p);
    if (q_suppressed) return exponent_type_name(tp);
    ExponentType tq = classify_exponent(q);
    if (tp == tq) return exponent_type_name(tp);
    return exponent_type_name(tp) + "/" + exponent_type_name(tq);
}

} // namespace

RegimeRow regime(int m, int k, const Rational& mu) {
    if (m < 1 || k < 1) throw DomainError("regime: need m >= 1, k >= 1");
    RegimeRow row;
    row.m = m;
    row.k = k;
    row.mu = mu;
    row.q_suppressed = (m == 1 && k == 1);

    ExceptionalSet exc = exceptional_mus(m, k);
    if (mu == exc.scalar_exceptional) {
        row.excluded = true;
        row.interval = "{" + mu.str() + "}";
        row.note = branch_name(select_scalar_branch(m, k, mu.to_double()));
        row.ordering = "";
        row.label = "excluded";
        return row;
    }

    PqResult r = pq(m, k, mu);
    row.alpha = r.alpha;
    row.beta = r.beta;
    row.p = r.p;
    row.q = r.q;
    row.alpha_sign = r.alpha.sign();

    std::vector<Breakpoint> bp = breakpoints_for(m, k);
    bool is_point = false;
    for (const auto& b : bp) {
        if (b.exact && *b.exact == mu) {
            is_point = true;
            row.interval = "{" + mu.str() + "}";
            break;
        }
    }
    if (!is_point) {
        double v = mu.to_double();
        std::string lo = "-inf", hi = "+inf";
        for (const auto& b : bp) {
            if (b.approx < v) lo = b.text;
            if (b.approx > v) {
                hi = b.text;
                break;
            }
        }
        row.interval = "(" + lo + "," + hi + ")";
    }

    row.ordering = is_point ? point_ordering(r.p, r.q, row.q_suppressed)
                            : interval_ordering(r.p, r.q, row.q_suppressed);
    row.label = regime_label(r.p, r.q, row.q_suppressed);
    return row;
}

SobolevThresholds sobolev_thresholds(int m, int k) {
    if (m < 3) throw DomainError("sobolev_thresholds: need m >= 3");
    SobolevThresholds out;
    out.mu_pY = Rational(-(k + 1), m - 2);
    out.mu_qY = Rational(-k, m - 2);
    out.p_Y = Rational(m + 2, m - 2);
    out.alpha_at_pY = Rational(-2, k + 1);
    out.beta_at_pY = Rational(4 * (m - 1), m - 2) - Rational(4 * k, k + 1);
    return out;
}

AsymptoticsReport asymptotics(int m, int k, const std::vector<double>& mu_sequence) {
    if (m < 3) throw DomainError("asymptotics: need m >= 3");
    AsymptoticsReport rep;
    rep.beta_limit = 4.0 * (m - 1) / (m - 2);
    rep.p_limit = 4.0 / (m - 2) + 1.0;
    rep.alpha_mu_limit = 2.0 / (m - 2);
    for (double mu : mu_sequence) {
        CoefficientSet<double> cs = coefficient_set<double>(m, k, mu);
        AsymptoticsReport::Sample s{mu, cs.scalar.alpha, cs.scalar.beta, cs.p, cs.q,
                                    cs.scalar.alpha * mu};
        rep.samples.push_back(s);
        rep.max_beta_deviation = std::max(rep.max_beta_deviation, std::abs(s.beta - rep.beta_limit));
        rep.max_p_deviation = std::max(rep.max_p_deviation, std::abs(s.p - rep.p_limit));
    }
    return rep;
}

namespace {

void emit_rows_for(std::vector<RegimeRow>& rows, int m, int k) {
    std::vector<Breakpoint> bp = breakpoints_for(m, k);
    // leading unbounded interval
    Rational first_sample = (bp.front().exact ? *bp.front().exact : Rational(0)) - Rational(1);
    if (!bp.front().exact) first_sample = Rational(static_cast<long long>(std::floor(bp.front().approx)) - 1);
    rows.push_back(regime(m, k, first_sample));
    for (std::size_t i = 0; i < bp.size(); ++i) {
        if (bp[i].exact) rows.push_back(regime(m, k, *bp[i].exact));
        if (i + 1 < bp.size()) {
            // rational midpoint of the open cell
            Rational lo = bp[i].exact ? *bp[i].exact : Rational(0);
            Rational hi = bp[i + 1].exact ? *bp[i + 1].exact : Rational(0);
            if (bp[i].exact && bp[i + 1].exact) {
                Rational mid = (lo + hi) / Rational(2);
                if (mid != lo && mid != hi) rows.push_back(regime(m, k, mid));
            } else {
                double mid = 0.5 * (bp[i].approx + bp[i + 1].approx);
                rows.push_back(regime(m, k, Rational(static_cast<long long>(std::llround(mid * 1024)), 1024)));
            }
        }
    }
    Rational last_sample = (bp.back().exact ? *bp.back().exact : Rational(0)) + Rational(1);
    if (!bp.back().exact) last_sample = Rational(static_cast<long long>(std::ceil(bp.back().approx)) + 1);
    rows.push_back(regime(m, k, last_sample));
}

} // namespace

std::vector<RegimeRow> table_rows(int which) {
    std::vector<RegimeRow> rows;
    switch (which) {
        case 4:
            // representatives: inside D, outside D with rational roots, and on D0
            emit_rows_for(rows, 3, 9);
            emit_rows_for(rows, 2, 3);
            emit_rows_for(rows, 3, 8);
            break;
        case 5: emit_rows_for(rows, 1, 4); break;
        case 6: emit_rows_for(rows, 1, 3); break;
        case 7: emit_rows_for(rows, 1, 2); break;
        case 8: emit_rows_for(rows, 1, 1); break;
        default: throw DomainError("table_rows: which must be 4..8");
    }
    return rows;
}

std::string table_header(int which) {
    std::string params;
    switch (which) {
        case 4: params = "m>=2 representatives (3,9) in D, (2,3) outside D, (3,8) on D0"; break;
        case 5: params = "m=1, k=4 (k>=4 regime)"; break;
        case 6: params = "m=1, k=3"; break;
        case 7: params = "m=1, k=2"; break;
        case 8: params = "m=1, k=1 (S_F=0: q suppressed)"; break;
        default: throw DomainError("table_header: which must be 4..8");
    }
    return "cwp 0.1.0 | table " + std::to_string(which) + " | " + params +
           " | one rational sample per open cell plus every breakpoint";
}

std::string render_rows_csv(const std::vector<RegimeRow>& rows, const std::string& header) {
    std::ostringstream os;
    os << "# " << header << "\n";
    os << "m,k,mu,interval,alpha,beta,p,q,ordering,label,note,disclaimer\n";
    for (const auto& r : rows) {
        os << r.m << ',' << r.k << ',' << r.mu.str() << ',' << r.interval << ',';
        if (r.excluded) os << ",,,,";
        else os << r.alpha.str() << ',' << r.beta.str() << ',' << r.p.str() << ',' << r.q.str() << ',';
        os << r.ordering << ',' << r.label << ',' << r.note << ',' << r.disclaimer << "\n";
    }
    return os.str();
}

std::string render_rows_md(const std::vector<RegimeRow>& rows, const std::string& header) {
    std::ostringstream os;
    os << "### " << header << "\n\n";
    os << "| m | k | mu | interval | alpha | beta | p | q | ordering | label |\n";
    os << "|---|---|----|----------|-------|------|---|---|----------|-------|\n";
    for (const auto& r : rows) {
        os << "| " << r.m << " | " << r.k << " | " << r.mu.str() << " | " << r.interval << " | ";
        if (r.excluded) os << " |  |  |  |  | " << r.label << " (" << r.note << ") |\n";
        else
            os << r.alpha.str() << " | " << r.beta.str() << " | " << r.p.str() << " | " << r.q.str()
               << " | " << r.ordering << " | " << r.label << " |\n";
    }
    return os.str();
}

} // namespace cwp
