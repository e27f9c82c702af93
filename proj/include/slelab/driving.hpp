#pragma once

// Uniformly sampled driving functions.

#include "slelab/io.hpp"
#include "slelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sle {

enum class Generator { brownian, constant, samples };

inline std::string to_string(Generator g) {
    switch (g) {
    case Generator::brownian: return "brownian";
    case Generator::constant: return "constant";
    case Generator::samples: return "samples";
    }
    return "unknown";
}

/// xi sampled at t_k = k dt, with xi[0] = 0.
class DrivingPath {
public:
    DrivingPath(double dt, std::vector<double> xi, Generator gen = Generator::samples)
        : dt_(dt), xi_(std::move(xi)), generator_(gen) {
        if (!(dt_ > 0.0)) throw std::invalid_argument("DrivingPath: dt must be positive");
        if (xi_.size() < 2) throw std::invalid_argument("DrivingPath: need at least two samples");
        if (xi_[0] != 0.0) throw std::invalid_argument("DrivingPath: xi[0] must be 0");
    }

    /// sqrt(kappa) B on [0, T] with n = round(T / dt) steps.
    static DrivingPath brownian(double kappa, double T, double dt, std::uint64_t seed, std::uint64_t stream = 0) {
        if (!(kappa >= 0.0)) throw std::invalid_argument("brownian: kappa must be nonnegative");
        const std::size_t n = step_count(T, dt);
        RandomStream rng(seed, stream);
        std::vector<double> xi(n + 1, 0.0);
        const double sd = std::sqrt(kappa * dt);
        for (std::size_t k = 1; k <= n; ++k) xi[k] = xi[k - 1] + sd * rng.normal();
        DrivingPath d(dt, std::move(xi), Generator::brownian);
        d.kappa_ = kappa;
        d.seed_ = seed;
        return d;
    }

    /// xi(0) = 0 and xi(t) = c for t > 0: a single jump in the first step.
    static DrivingPath constant(double c, double T, double dt) {
        const std::size_t n = step_count(T, dt);
        std::vector<double> xi(n + 1, c);
        xi[0] = 0.0;
        return DrivingPath(dt, std::move(xi), Generator::constant);
    }

    static DrivingPath zero(double T, double dt) { return constant(0.0, T, dt); }

    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return xi_.size() - 1; }
    double horizon() const noexcept { return dt_ * static_cast<double>(steps()); }
    double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }
    const std::vector<double>& xi() const noexcept { return xi_; }
    double operator[](std::size_t k) const { return xi_.at(k); }
    Generator generator() const noexcept { return generator_; }
    double kappa() const noexcept { return kappa_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Same function sampled at every `stride`-th point (steps must divide evenly).
    DrivingPath coarsen(std::size_t stride) const {
        if (stride == 0 || steps() % stride != 0)
            throw std::invalid_argument("coarsen: stride must divide the step count");
        std::vector<double> xi;
        xi.reserve(steps() / stride + 1);
        for (std::size_t k = 0; k <= steps(); k += stride) xi.push_back(xi_[k]);
        DrivingPath d(dt_ * static_cast<double>(stride), std::move(xi), generator_);
        d.kappa_ = kappa_;
        d.seed_ = seed_;
        return d;
    }

    /// Restriction to [0, t_k].
    DrivingPath prefix(std::size_t k) const {
        if (k < 1 || k > steps()) throw std::out_of_range("prefix: index out of range");
        DrivingPath d(dt_, std::vector<double>(xi_.begin(), xi_.begin() + static_cast<long>(k) + 1), generator_);
        d.kappa_ = kappa_;
        d.seed_ = seed_;
        return d;
    }

    double max_abs(std::size_t k) const {
        double m = 0.0;
        for (std::size_t j = 0; j <= k && j < xi_.size(); ++j) m = std::max(m, std::abs(xi_[j]));
        return m;
    }

    io::CsvTable to_csv() const {
        io::CsvTable t({"t", "xi"});
        for (std::size_t k = 0; k < xi_.size(); ++k) t.add(time(k), xi_[k]);
        return t;
    }

    static DrivingPath from_csv(const io::CsvTable& t) {
        const auto ct = t.column("t"), cx = t.column("xi");
        if (t.size() < 2) throw std::invalid_argument("driving CSV: need at least two rows");
        std::vector<double> xi;
        for (std::size_t r = 0; r < t.size(); ++r) xi.push_back(t.number(r, cx));
        const double dt = t.number(1, ct) - t.number(0, ct);
        for (std::size_t r = 1; r < t.size(); ++r) {
            const double expect = t.number(0, ct) + dt * static_cast<double>(r);
            if (std::abs(t.number(r, ct) - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
                throw std::invalid_argument("driving CSV: times must be uniformly spaced");
        }
        return DrivingPath(dt, std::move(xi), Generator::samples);
    }

private:
    static std::size_t step_count(double T, double dt) {
        if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("DrivingPath: T and dt must be positive");
        const double n = std::round(T / dt);
        if (n < 1.0) throw std::invalid_argument("DrivingPath: T / dt must be at least 1");
        return static_cast<std::size_t>(n);
    }

    double dt_;
    std::vector<double> xi_;
    Generator generator_;
    double kappa_ = 0.0;
    std::uint64_t seed_ = 0;
};

} // namespace sle
