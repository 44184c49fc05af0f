#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cwp {

// Exact rational arithmetic on 64-bit numerator/denominator with 128-bit
// intermediates. Throws on overflow rather than silently wrapping; the
// coefficient algebra and table reproduction stay far below the limits.
class Rational {
public:
    Rational() = default;
    Rational(long long n) : num_(n), den_(1) {} // NOLINT: implicit by design
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    // "3", "-5/2"
    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    static Rational parse(const std::string& s) {
        auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(std::stoll(s));
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    using i128 = __int128;

    static Rational make(i128 n, i128 d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        constexpr i128 lim = INT64_MAX;
        if (n > lim || n < -lim || d > lim) throw std::overflow_error("Rational overflow");
        Rational r;
        r.num_ = static_cast<long long>(n);
        r.den_ = static_cast<long long>(d);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }

    void normalize() { *this = make(num_, den_); }

    long long num_ = 0;
    long long den_ = 1;
};

// Element of the quadratic extension Q(sqrt(d)): a + b*sqrt(d) with a, b, d
// rational and d >= 0. Closed under +,-,*,/ for a fixed d; used to verify the
// exceptional-parameter table rows exactly when the roots are irrational.
class QuadExt {
public:
    QuadExt() = default;
    QuadExt(Rational a) : a_(a) {} // NOLINT: implicit by design
    QuadExt(Rational a, Rational b, Rational d) : a_(a), b_(b), d_(d) {
        if (d_ < Rational(0)) throw std::domain_error("QuadExt: negative radicand");
        if (b_.is_zero()) d_ = Rational(0);
    }

    const Rational& a() const { return a_; }
    const Rational& b() const { return b_; }
    const Rational& d() const { return d_; }
    bool is_zero() const { return a_.is_zero() && b_.is_zero(); }

    double to_double() const {
        return a_.to_double() + b_.to_double() * std::sqrt(d_.to_double());
    }

    friend QuadExt operator+(const QuadExt& x, const QuadExt& y) {
        Rational d = merged(x, y);
        return QuadExt(x.a_ + y.a_, x.b_ + y.b_, d);
    }
    friend QuadExt operator-(const QuadExt& x, const QuadExt& y) {
        Rational d = merged(x, y);
        return QuadExt(x.a_ - y.a_, x.b_ - y.b_, d);
    }
    friend QuadExt operator*(const QuadExt& x, const QuadExt& y) {
        Rational d = merged(x, y);
        return QuadExt(x.a_ * y.a_ + x.b_ * y.b_ * d, x.a_ * y.b_ + x.b_ * y.a_, d);
    }
    friend QuadExt operator/(const QuadExt& x, const QuadExt& y) {
        Rational d = merged(x, y);
        Rational n = y.a_ * y.a_ - y.b_ * y.b_ * d; // conjugate norm
        if (n.is_zero()) throw std::domain_error("QuadExt: division by zero");
        QuadExt conj(y.a_, -y.b_, d);
        QuadExt p = x * conj;
        return QuadExt(p.a_ / n, p.b_ / n, d);
    }
    QuadExt operator-() const { return QuadExt(-a_, -b_, d_); }

    friend bool operator==(const QuadExt& x, const QuadExt& y) {
        return (x - y).is_zero();
    }

    std::string str() const {
        if (b_.is_zero()) return a_.str();
        return a_.str() + (b_.sign() >= 0 ? "+" : "") + b_.str() + "*sqrt(" + d_.str() + ")";
    }

private:
    static Rational merged(const QuadExt& x, const QuadExt& y) {
        if (x.b_.is_zero()) return y.d_;
        if (y.b_.is_zero()) return x.d_;
        if (x.d_ != y.d_) throw std::domain_error("QuadExt: mixed radicands");
        return x.d_;
    }

    Rational a_{0};
    Rational b_{0};
    Rational d_{0};
};

} // namespace cwp
