#include "ldlab/quadrature.hpp"

#include "ldlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace ldlab {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Segment {
    double a, b;
    double value, error;
    int piece;
};

struct ByError {
    bool operator()(const Segment& x, const Segment& y) const { return x.error < y.error; }
};

// One piece of the original range mapped onto a finite parameter interval.
struct Piece {
    Integrand g;
    double u0, u1;
};

Segment rule21(const Piece& p, int index, double a, double b, int& evals) {
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);
    const double dhlgth = std::fabs(hlgth);

    const double fc = p.g(centr);
    double resg = 0.0;
    double resk = kWgk[10] * fc;
    double resabs = std::fabs(resk);
    double fv1[10], fv2[10];
    for (int j = 0; j < 5; ++j) {
        const int jtw = 2 * j + 1;
        const double absc = hlgth * kXgk[jtw];
        const double f1 = p.g(centr - absc);
        const double f2 = p.g(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += kWg[j] * (f1 + f2);
        resk += kWgk[jtw] * (f1 + f2);
        resabs += kWgk[jtw] * (std::fabs(f1) + std::fabs(f2));
    }
    for (int j = 0; j < 5; ++j) {
        const int jtwm1 = 2 * j;
        const double absc = hlgth * kXgk[jtwm1];
        const double f1 = p.g(centr - absc);
        const double f2 = p.g(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += kWgk[jtwm1] * (f1 + f2);
        resabs += kWgk[jtwm1] * (std::fabs(f1) + std::fabs(f2));
    }
    evals += 21;

    const double reskh = resk * 0.5;
    double resasc = kWgk[10] * std::fabs(fc - reskh);
    for (int j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));

    const double result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    double abserr = std::fabs((resk - resg) * hlgth);
    if (resasc != 0.0 && abserr != 0.0)
        abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
        abserr = std::max(50.0 * kEps * resabs, abserr);
    return {a, b, result, abserr, index};
}

Integrand guard(Integrand g) {
    return [g = std::move(g)](double u) {
        const double v = g(u);
        return std::isfinite(v) ? v : 0.0;
    };
}

// Map one finite or infinite subrange onto pieces with finite parameter ranges,
// applying endpoint substitutions where requested.
void add_range(std::vector<Piece>& pieces, const Integrand& f, double lo, double hi,
               double left_power, double right_power) {
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);

    if (lo_inf && hi_inf) {
        // x = t / (1 - t^2)
        pieces.push_back({guard([f](double t) {
                              const double d = 1.0 - t * t;
                              return f(t / d) * (1.0 + t * t) / (d * d);
                          }),
                          -1.0, 1.0});
        return;
    }
    if (hi_inf) {
        double split = lo;
        if (left_power < 1.0) {
            split = lo + 1.0;
            add_range(pieces, f, lo, split, left_power, 1.0);
        }
        // x = split + t / (1 - t)
        pieces.push_back({guard([f, split](double t) {
                              const double d = 1.0 - t;
                              return f(split + t / d) / (d * d);
                          }),
                          0.0, 1.0});
        return;
    }
    if (lo_inf) {
        double split = hi;
        if (right_power < 1.0) {
            split = hi - 1.0;
            add_range(pieces, f, split, hi, 1.0, right_power);
        }
        pieces.push_back({guard([f, split](double t) {
                              const double d = 1.0 - t;
                              return f(split - t / d) / (d * d);
                          }),
                          0.0, 1.0});
        return;
    }

    const bool sub_left = left_power < 1.0;
    const bool sub_right = right_power < 1.0;
    if (!sub_left && !sub_right) {
        pieces.push_back({guard(f), lo, hi});
        return;
    }
    const double mid = (sub_left && sub_right) ? 0.5 * (lo + hi) : (sub_left ? hi : lo);
    if (sub_left) {
        const double k = left_power;
        pieces.push_back({guard([f, lo, k](double w) {
                              if (w <= 0.0) return 0.0;
                              const double x = lo + std::pow(w, 1.0 / k);
                              return f(x) * std::pow(w, 1.0 / k - 1.0) / k;
                          }),
                          0.0, std::pow(mid - lo, k)});
    }
    if (sub_right) {
        const double k = right_power;
        pieces.push_back({guard([f, hi, k](double w) {
                              if (w <= 0.0) return 0.0;
                              const double x = hi - std::pow(w, 1.0 / k);
                              return f(x) * std::pow(w, 1.0 / k - 1.0) / k;
                          }),
                          0.0, std::pow(hi - mid, k)});
    }
}

} // namespace

double substitution_power(double kappa, const QuadratureConfig& cfg) {
    if (!(kappa < 1.0)) return 1.0;
    if (cfg.edge_power > 0.0) return std::min(cfg.edge_power, 1.0);
    return kappa;
}

QuadResult integrate(const Integrand& f, double lo, double hi, const QuadratureConfig& cfg,
                     EndpointPowers powers, std::span<const double> breakpoints) {
    if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0))
        throw InvalidArgument("quadrature tolerances must be positive");
    if (std::isnan(lo) || std::isnan(hi))
        throw InvalidArgument("quadrature limits must not be NaN");
    if (lo == hi) return {};
    if (lo > hi) {
        QuadResult r = integrate(f, hi, lo, cfg, {powers.right, powers.left}, breakpoints);
        r.value = -r.value;
        return r;
    }

    std::vector<double> cuts{lo};
    for (double c : breakpoints)
        if (c > lo && c < hi) cuts.push_back(c);
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(hi);

    std::vector<Piece> pieces;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lp = (i == 0) ? powers.left : 1.0;
        const double rp = (i + 2 == cuts.size()) ? powers.right : 1.0;
        add_range(pieces, f, cuts[i], cuts[i + 1], lp, rp);
    }

    QuadResult out;
    std::priority_queue<Segment, std::vector<Segment>, ByError> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        Segment s = rule21(pieces[i], static_cast<int>(i), pieces[i].u0, pieces[i].u1,
                           out.evaluations);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }

    // Segments too narrow to split further are retired here.
    double frozen_err = 0.0;
    while (!heap.empty()) {
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(total));
        if (total_err <= tol) break;
        if (out.subdivisions >= cfg.max_subdivisions) {
            std::ostringstream msg;
            msg << "adaptive quadrature did not converge on [" << lo << ", " << hi
                << "]: estimate " << total << ", error " << total_err << " > tolerance "
                << tol << " after " << out.subdivisions << " subdivisions";
            throw ConvergenceError(msg.str());
        }
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            std::fabs(worst.b - worst.a) <=
                100.0 * kEps * std::max(std::fabs(worst.a), std::fabs(worst.b))) {
            frozen_err += worst.error;
            if (heap.empty() || frozen_err >= total_err) break;
            continue;
        }
        const Piece& p = pieces[static_cast<std::size_t>(worst.piece)];
        Segment left = rule21(p, worst.piece, worst.a, mid, out.evaluations);
        Segment right = rule21(p, worst.piece, mid, worst.b, out.evaluations);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++out.subdivisions;
    }

    // Recompute the sum from the retained segments to shed accumulated rounding.
    double sum = 0.0;
    double err = frozen_err;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = (frozen_err > 0.0) ? total : sum;
    out.abs_error = std::max(err, total_err);
    return out;
}

} // namespace ldlab
