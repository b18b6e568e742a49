// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <flexcz/flexcz.hpp>

#include "properties.hpp"

#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace flexcz;

namespace
{

constexpr int timing_repeats = 10;
constexpr Index n_directions = 360;

std::string data(const std::string& f)
{
    return std::string(FLEXCZ_DATA_DIR) + "/" + f;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

struct Outcome
{
    bool pass = false;
    std::string detail;
};

template<typename F>
double timed(F&& f)
{
    const auto t0 = detail::Clock::now();
    f();
    return detail::seconds_since(t0);
}

// uniform circle in 2-D, seeded Gaussian directions otherwise
std::vector<Vector> directions(Index n, Index count)
{
    if (n == 2)
        return uniform_directions_2d(count);
    std::vector<Vector> out;
    std::mt19937_64 rng(0xd1ec7);
    std::normal_distribution<double> nd;
    for (Index k = 0; k < count; ++k)
    {
        Vector d(n);
        for (Index i = 0; i < n; ++i)
            d[i] = nd(rng);
        out.push_back(d / d.norm());
    }
    return out;
}

double relative_gap(double a, double b)
{
    return std::abs(a - b) / (1.0 + std::abs(b));
}

double max_gap(const ConstrainedZonotope& a, const ConstrainedZonotope& b, Index count)
{
    const auto dirs = directions(a.dim(), count);
    const auto va = support_values(a, dirs);
    const auto vb = support_values(b, dirs);
    double worst = 0.0;
    for (std::size_t k = 0; k < dirs.size(); ++k)
        worst = std::max(worst, relative_gap(va[k], vb[k]));
    return worst;
}

double max_gap(const ConstrainedZonotope& a, const HPolytope& b, Index count)
{
    SupportOracle oracle(a);
    double worst = 0.0;
    for (const auto& d : directions(a.dim(), count))
    {
        const auto s = support(b, d);
        if (!s)
            throw UnboundedError("projected polytope is unbounded.");
        worst = std::max(worst, relative_gap(oracle(d).value, *s));
    }
    return worst;
}

std::vector<Index> parse_text_keep(const std::string& file)
{
    return Json::parse(detail::read_file(data(file))).at("keep").get<std::vector<Index>>();
}

std::vector<Index> keep_of(const FeasibleSet& fs, const std::vector<std::string>& sel)
{
    std::vector<Index> keep;
    for (const auto& s : sel)
        keep.push_back(fs.index.at(s));
    return keep;
}

// ---- criteria ----

Outcome exactness_vs_oracle()
{
    const GridCase c = load_case_file(data("case4dist_ext.json"));
    const auto sel = root_pq_names(c, 1);
    double worst = 0.0;
    for (int N = 1; N <= 4; ++N)
    {
        const ForResult r = compute_for(c, N, LossMode::lossless, sel, ConversionConfig::exact());
        const HPolytope fm = project_polytope(r.feasible.polytope, keep_of(r.feasible, sel));
        worst = std::max(worst, max_gap(r.projected, fm, n_directions));
    }
    for (const char* f : {"cube.json", "simplex.json"})
    {
        const HPolytope P = load_polytope(data(f));
        const auto keep = parse_text_keep(f);
        RowMatrix M = RowMatrix::Zero(static_cast<Index>(keep.size()), P.dim());
        for (std::size_t i = 0; i < keep.size(); ++i)
            M(static_cast<Index>(i), keep[i]) = 1.0;
        const ConstrainedZonotope cz = linear_map(polytope_to_cz(P, ConversionConfig::exact()).cz, M);
        worst = std::max(worst, max_gap(cz, project_polytope(P, keep), n_directions));
    }
    return {worst <= 1e-6, fmt("max relative support mismatch %.3g (limit 1e-6)", worst)};
}

Outcome enlarged_bounds_invariance()
{
    struct Run
    {
        const char* file;
        int N;
    };
    const std::vector<Run> runs{{"case4dist_ext.json", 1}, {"case4dist_ext.json", 2}, {"case4dist_ext.json", 3},
        {"case4dist_ext.json", 4}, {"case15_ext.json", 1}};
    double worst = 0.0;
    for (const auto& run : runs)
    {
        const GridCase c = load_case_file(data(run.file));
        const auto sel = root_pq_names(c, 1);
        const ForResult exact = compute_for(c, run.N, LossMode::lossless, sel, ConversionConfig::exact());
        for (double f : {2.0, 10.0})
        {
            const ForResult enl = compute_for(c, run.N, LossMode::lossless, sel, ConversionConfig::enlarged(f));
            worst = std::max(worst, max_gap(enl.projected, exact.projected, n_directions));
        }
    }
    return {worst <= 1e-6, fmt("max relative support gap across bounds modes %.3g (limit 1e-6)", worst)};
}

Outcome speed_ordering()
{
    const GridCase c = load_case_file(data("case4dist_ext.json"));
    const auto sel = root_pq_names(c, 1);
    bool ok = true;
    std::string detail;
    double speedup4 = 0.0;
    for (int N = 2; N <= 4; ++N)
    {
        double cz_total = 0.0, cz_online = 0.0, fm_time = 0.0;
        for (int rep = 0; rep < timing_repeats; ++rep)
        {
            const ForResult r = compute_for(c, N, LossMode::lossless, sel, ConversionConfig::exact());
            cz_total += r.report.offline_seconds + r.report.online_seconds + r.report.projection_seconds;
            cz_online += r.report.online_seconds + r.report.projection_seconds;
            const auto keep = keep_of(r.feasible, sel);
            fm_time += timed([&] { (void)project_polytope(r.feasible.polytope, keep); });
        }
        cz_total /= timing_repeats;
        cz_online /= timing_repeats;
        fm_time /= timing_repeats;
        ok = ok && cz_total < fm_time;
        detail += fmt("N=%g cz %.3gs fm %.3gs; ", N, cz_total, fm_time);
        if (N == 4)
            speedup4 = fm_time / cz_online;
    }
    ok = ok && speedup4 >= 100.0;
    return {ok, detail + fmt("online speedup at N=4 %.0fx (need 100x)", speedup4)};
}

Outcome offline_online_split()
{
    const GridCase c = load_case_file(data("case15_ext.json"));
    const auto sel = root_pq_names(c, 1);
    double off12 = 0.0, on12 = 0.0;
    for (int rep = 0; rep < timing_repeats; ++rep)
    {
        const ForResult r = compute_for(c, 12, LossMode::lossless, sel, ConversionConfig::exact());
        off12 += r.report.offline_seconds;
        on12 += r.report.online_seconds + r.report.projection_seconds;
    }
    off12 /= timing_repeats;
    on12 /= timing_repeats;
    const ForResult r24 = compute_for(c, 24, LossMode::lossless, sel, ConversionConfig::exact());
    const double off24 = r24.report.offline_seconds;
    const double ratio = on12 / off12;
    const bool ok = ratio <= 0.01 && off12 < 600.0 && off24 > off12;
    return {ok, fmt("N=12 offline %.3gs online %.3gs (%.3g%% of offline, limit 1%%); N=24 offline %.3gs", off12, on12,
                    100.0 * ratio, off24)};
}

Outcome incremental_update()
{
    const GridCase c = load_case_file(data("case15_ext.json"));
    const int N = 12;
    const auto sel = root_pq_names(c, 1);
    const double f = c.generators.front().f_max.at(1);

    // the timed insertion is the intersection itself; the optional
    // non-cutting check costs one LP over the factors and is reported apart
    double offline = 0.0, insertion = 0.0, checked = 0.0;
    ForResult r;
    std::vector<LinearConstraint> row;
    UpdateResult up;
    for (int rep = 0; rep < timing_repeats; ++rep)
    {
        r = compute_for(c, N, LossMode::lossless, sel, ConversionConfig::exact());
        offline += r.report.offline_seconds;
        row = {generator_bound_rows(r.feasible.index, 0, 1, 0.5 * f)[1]};
        up = update_with_constraints(r.conversion.cz, row, false);
        insertion += up.seconds;
        checked += update_with_constraints(r.conversion.cz, row, true).seconds;
    }
    offline /= timing_repeats;
    insertion /= timing_repeats;
    checked /= timing_repeats;

    HPolytope P = r.feasible.polytope;
    P.add_ineq(row[0].h, row[0].zeta, tags::gen_bound);
    const Conversion rebuilt = polytope_to_cz(P, ConversionConfig::exact(), nullptr, &r.feasible.index.names());
    const RowMatrix M = coupling_projection_matrix(r.feasible.index, sel);
    const double gap = max_gap(linear_map(up.cz, M), linear_map(rebuilt.cz, M), n_directions);
    const double share = insertion / offline;
    return {share <= 0.10 && gap <= 1e-9,
        fmt("insertion %.3gs = %.3g%% of offline %.3gs (limit 10%%); with cut check %.3gs", insertion, 100.0 * share,
            offline, checked)
            + fmt("; rebuild mismatch %.3g (limit 1e-9)", gap)};
}

std::vector<double> slice_areas(const GridCase& c, int N)
{
    const auto a = root_pq_names(c, 1);
    const auto b = root_pq_names(c, 2);
    const ForResult r = compute_for(c, N, LossMode::lossless, {a[0], b[0], b[1]}, ConversionConfig::exact());
    const auto [lo, hi] = coordinate_range(r.projected, 0);
    std::vector<double> out;
    for (int k = 0; k < 5; ++k)
        out.push_back(polygon_area(hull_2d(conditional_for(r.projected, lo + (hi - lo) * k / 4.0)).vertices));
    return out;
}

Outcome conditional_monotonicity()
{
    const GridCase c = load_case_file(data("case15_ext.json"));
    const int N = c.horizon;
    const auto with = slice_areas(c, N);
    const auto without = slice_areas(without_storage(c), N);

    // equal areas within the same relative tolerance count as non-increasing
    bool monotone = true;
    for (std::size_t k = 1; k < with.size(); ++k)
        monotone = monotone && with[k] <= with[k - 1] * (1.0 + 1e-6);
    const double drop = (with.front() - with.back()) / with.front();
    double spread = 0.0;
    for (double a : without)
        spread = std::max(spread, std::abs(a - without.front()) / without.front());

    std::string areas;
    for (double a : with)
        areas += fmt("%.4g ", a);
    return {monotone && drop >= 0.10 && spread <= 1e-6,
        "areas " + areas + fmt("(decrease %.3g%%, need 10%%); storage-free spread %.3g (limit 1e-6)", 100.0 * drop,
                                  spread)};
}

Outcome property_suites()
{
    const auto t0 = detail::Clock::now();
    const auto reports = properties::run_all(200);
    const double secs = detail::seconds_since(t0);
    bool ok = true;
    std::string detail;
    for (const auto& r : reports)
    {
        ok = ok && r.ok();
        detail += r.name + (r.ok() ? " ok" : " FAILED (" + r.first_failure + ")") + "; ";
    }
    return {ok && secs < 60.0, detail + fmt("%.3gs (limit 60s)", secs)};
}

Outcome parallel_determinism()
{
    const GridCase c = load_case_file(data("case15_ext.json"));
    const FeasibleSet fs = build_feasible_set(c, 12, LossMode::lossless);
    ConversionConfig par = ConversionConfig::exact();
    par.parallel = true;
    const Conversion a = polytope_to_cz(fs.polytope, ConversionConfig::exact());
    const Conversion b = polytope_to_cz(fs.polytope, par);
    const std::string sa = dump_cz(a.cz), sb = dump_cz(b.cz);
    return {sa == sb, fmt("%g threads, %g bytes each", b.report.threads, static_cast<double>(sa.size()))
                           + (sa == sb ? ", identical" : ", DIFFERENT")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 exactness vs Fourier-Motzkin", exactness_vs_oracle},
        {"2 enlarged-bounds invariance", enlarged_bounds_invariance},
        {"3 speed ordering", speed_ordering},
        {"4 offline/online split", offline_online_split},
        {"5 incremental update", incremental_update},
        {"6 conditional FOR monotonicity", conditional_monotonicity},
        {"7 property suites", property_suites},
        {"8 parallel determinism", parallel_determinism},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria)
    {
        Outcome o;
        try
        {
            o = run();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s [%s] %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
