#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "hhfs/csv.hpp"
#include "hhfs/errors.hpp"

namespace hhfs {

namespace detail {

// Per-size triangular tables indexed by (r_mild, r_severe), r_mild + r_severe <= n.
template <class T>
class tri_table {
public:
    tri_table() = default;
    explicit tri_table(int max_size) : max_size_(max_size), data_(max_size) {
        for (int n = 1; n <= max_size_; ++n)
            data_[n - 1].assign(static_cast<std::size_t>(cell_count(n)), T{});
    }

    static int cell_count(int n) { return (n + 1) * (n + 2) / 2; }

    int max_size() const { return max_size_; }

    static int offset(int n, int rm, int rs) {
        return rm * (n + 1) - rm * (rm - 1) / 2 + rs;
    }

    T& at(int n, int rm, int rs) { return data_[n - 1][static_cast<std::size_t>(offset(n, rm, rs))]; }
    const T& at(int n, int rm, int rs) const {
        return data_[n - 1][static_cast<std::size_t>(offset(n, rm, rs))];
    }

    std::vector<T>& table(int n) { return data_[n - 1]; }
    const std::vector<T>& table(int n) const { return data_[n - 1]; }

private:
    int max_size_ = 0;
    std::vector<std::vector<T>> data_;
};

} // namespace detail

// Joint within-household final-size distribution: one probability table
// p_n(r_mild, r_severe) per household size n = 1..max_size.
class FinalSizeDistribution {
public:
    FinalSizeDistribution() = default;
    explicit FinalSizeDistribution(int max_size) : cells_(max_size) {}

    int max_size() const { return cells_.max_size(); }
    static int cell_count(int n) { return detail::tri_table<double>::cell_count(n); }

    double at(int n, int rm, int rs) const { return cells_.at(n, rm, rs); }
    double& at(int n, int rm, int rs) { return cells_.at(n, rm, rs); }

    double size_sum(int n) const {
        double s = 0.0;
        for (double v : cells_.table(n)) s += v;
        return s;
    }

    void scale_size(int n, double factor) {
        for (double& v : cells_.table(n)) v *= factor;
    }

    // Per-individual probabilities for size n: mild, severe, infected, severe share.
    struct Aggregates {
        double p_mild = 0, p_severe = 0, p_inf = 0, severe_share = 0;
    };

    Aggregates aggregates(int n) const {
        Aggregates a;
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs) {
                double p = at(n, rm, rs);
                a.p_mild += rm * p;
                a.p_severe += rs * p;
            }
        a.p_mild /= n;
        a.p_severe /= n;
        a.p_inf = a.p_mild + a.p_severe;
        a.severe_share = a.p_inf > 0 ? a.p_severe / a.p_inf : 0.0;
        return a;
    }

private:
    detail::tri_table<double> cells_;
};

inline void write_final_size_csv(const FinalSizeDistribution& d, std::ostream& os) {
    os << "n,r_m,r_s,probability\n";
    for (int n = 1; n <= d.max_size(); ++n)
        for (int rm = 0; rm <= n; ++rm)
            for (int rs = 0; rs + rm <= n; ++rs)
                os << n << ',' << rm << ',' << rs << ',' << fmt_g15(d.at(n, rm, rs)) << '\n';
}

inline FinalSizeDistribution read_final_size_csv(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("n,r_m,r_s,probability", 0) != 0)
        throw validation_error(name + ": expected header 'n,r_m,r_s,probability'");
    struct Cell {
        int n, rm, rs;
        double p;
    };
    std::vector<Cell> cells;
    int max_size = 0;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
            throw validation_error(name + ":" + std::to_string(lineno) + ": expected 4 fields");
        std::string where = name + ":" + std::to_string(lineno);
        Cell c{static_cast<int>(parse_int(f[0], where)), static_cast<int>(parse_int(f[1], where)),
               static_cast<int>(parse_int(f[2], where)), parse_double(f[3], where)};
        if (c.n < 1 || c.rm < 0 || c.rs < 0 || c.rm + c.rs > c.n)
            throw validation_error(where + ": cell (" + std::to_string(c.n) + "," +
                                   std::to_string(c.rm) + "," + std::to_string(c.rs) +
                                   ") is out of range");
        max_size = std::max(max_size, c.n);
        cells.push_back(c);
    }
    if (max_size == 0) throw validation_error(name + ": no data rows");
    FinalSizeDistribution d(max_size);
    for (const auto& c : cells) d.at(c.n, c.rm, c.rs) = c.p;
    return d;
}

} // namespace hhfs
