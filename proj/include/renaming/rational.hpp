#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace renaming {

// Exact rational number, always stored in reduced form with a positive
// denominator. Equal values therefore have identical representations, which
// the invariant checks rely on: they are strict rational inequalities and
// must be decidable bit-exactly, never through floating point.
class Rational {
public:
    Rational() : q_(0) {}
    Rational(std::int64_t value) : q_(static_cast<long>(value)) {}  // NOLINT(google-explicit-constructor)
    Rational(std::int64_t num, std::int64_t den) : q_(static_cast<long>(num), static_cast<long>(den)) {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        q_.canonicalize();
    }

    static Rational from_strings(const std::string& num, const std::string& den) {
        Rational r;
        r.q_ = mpq_class(mpz_class(num, 10), mpz_class(den, 10));
        if (r.q_.get_den() == 0) throw std::invalid_argument("Rational: zero denominator");
        r.q_.canonicalize();
        return r;
    }

    const mpz_class& numerator() const { return q_.get_num(); }
    const mpz_class& denominator() const { return q_.get_den(); }

    std::string num_str() const { return q_.get_num().get_str(); }
    std::string den_str() const { return q_.get_den().get_str(); }
    std::string to_string() const {
        return q_.get_den() == 1 ? num_str() : num_str() + "/" + den_str();
    }

    Rational operator-() const { return Rational(-q_); }
    Rational abs() const { return q_ < 0 ? Rational(-q_) : *this; }

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(mpq_class(a.q_ + b.q_)); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(mpq_class(a.q_ - b.q_)); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(mpq_class(a.q_ * b.q_)); }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.q_ == 0) throw std::invalid_argument("Rational: division by zero");
        return Rational(mpq_class(a.q_ / b.q_));
    }

    Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
    Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = mpq_cmp(a.q_.get_mpq_t(), b.q_.get_mpq_t());
        if (c < 0) return std::strong_ordering::less;
        if (c > 0) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    // Nearest integer; exact halves round toward +infinity. The protocols
    // only need |x - round(x)| <= 1/2, but a fixed tie rule keeps runs
    // deterministic.
    std::int64_t round_half_up() const {
        mpz_class num = 2 * q_.get_num() + q_.get_den();
        mpz_class den = 2 * q_.get_den();
        mpz_class out;
        mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        if (!out.fits_slong_p()) throw std::overflow_error("Rational: rounded value out of range");
        return static_cast<std::int64_t>(out.get_si());
    }

private:
    explicit Rational(mpq_class q) : q_(std::move(q)) { q_.canonicalize(); }

    mpq_class q_;
};

}  // namespace renaming
