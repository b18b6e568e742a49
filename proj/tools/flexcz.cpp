// Command-line front end: FOR computation, baseline comparison, benchmark
// tables, conditional-FOR sweeps and polytope conversion.
//
// Exit codes: 0 ok, 2 schema or usage error, 3 infeasible or unbounded
// model, 4 numerical failure, 5 CZ/FM mismatch, 6 FM row cap exceeded.
// Errors are reported on stderr as one line of JSON.

#include <flexcz/flexcz.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace flexcz;

namespace
{

enum Exit
{
    exit_ok = 0,
    exit_schema = 2,
    exit_infeasible = 3,
    exit_numerical = 4,
    exit_mismatch = 5,
    exit_row_cap = 6,
};

constexpr double mismatch_tol = 1e-6;

int report_error(const std::string& kind, const std::string& message, int code)
{
    std::cerr << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
    return code;
}

int exit_code(ErrorKind k)
{
    switch (k)
    {
        case ErrorKind::dimension:
        case ErrorKind::schema: return exit_schema;
        case ErrorKind::infeasible:
        case ErrorKind::unbounded: return exit_infeasible;
        case ErrorKind::numerical: return exit_numerical;
        case ErrorKind::row_cap: return exit_row_cap;
    }
    return exit_numerical;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        detail::write_file(path, text);
}

LossMode parse_mode(const std::string& s)
{
    if (s == "lossless")
        return LossMode::lossless;
    if (s == "loss-ll")
        return LossMode::loss_linearized;
    throw SchemaError("unknown mode '" + s + "' (expected lossless or loss-ll).");
}

ConversionConfig parse_bounds(const std::string& s)
{
    if (s == "exact")
        return ConversionConfig::exact();
    const std::string prefix = "enlarged:";
    if (s.rfind(prefix, 0) == 0)
    {
        double f = 0.0;
        try
        {
            f = std::stod(s.substr(prefix.size()));
        }
        catch (const std::exception&)
        {
            throw SchemaError("bad enlargement factor in '" + s + "'.");
        }
        if (!(f >= 1.0))
            throw SchemaError("enlargement factor must be at least 1.");
        return ConversionConfig::enlarged(f);
    }
    throw SchemaError("unknown bounds mode '" + s + "' (expected exact or enlarged:F).");
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty())
            out.push_back(item);
    return out;
}

/// root_pq, root_pq:k, root_p3 (p(1), p(2), q(2)) or a comma-separated list
/// of variable names.
std::vector<std::string> parse_selection(const GridCase& c, const std::string& s)
{
    if (s == "root_pq")
        return root_pq_names(c, 1);
    if (s.rfind("root_pq:", 0) == 0)
        return root_pq_names(c, std::stoi(s.substr(8)));
    if (s == "root_p3")
    {
        const auto a = root_pq_names(c, 1);
        const auto b = root_pq_names(c, 2);
        return {a[0], b[0], b[1]};
    }
    return split(s, ',');
}

int resolve_horizon(const GridCase& c, int requested)
{
    const int N = requested < 0 ? c.horizon : requested;
    c.check_horizon(N);
    return N;
}

double max_relative_mismatch(const ConstrainedZonotope& cz, const HPolytope& fm, Index n_dirs)
{
    double worst = 0.0;
    const Index d = cz.dim();
    std::vector<Vector> dirs;
    if (d == 2)
    {
        dirs = uniform_directions_2d(n_dirs);
    }
    else
    {
        for (Index i = 0; i < d; ++i)
        {
            dirs.push_back(Vector::Unit(d, i));
            dirs.push_back(-Vector::Unit(d, i));
        }
    }
    SupportOracle oracle(cz);
    for (const auto& dir : dirs)
    {
        const double a = oracle(dir).value;
        const auto b = support(fm, dir);
        if (!b)
            throw UnboundedError("compare: projected polytope is unbounded.");
        worst = std::max(worst, std::abs(a - *b) / (1.0 + std::abs(*b)));
    }
    return worst;
}

bool is_polytope_document(const std::string& path)
{
    const Json j = detail::parse_text(detail::read_file(path), "input");
    return j.is_object() && j.contains("schema") && j.at("schema") == polytope_schema;
}

std::vector<Index> polytope_keep(const std::string& path, Index dim)
{
    const Json j = detail::parse_text(detail::read_file(path), "polytope");
    std::vector<Index> keep;
    if (j.contains("keep"))
        for (const auto& k : j.at("keep"))
            keep.push_back(k.get<Index>());
    else
        for (Index i = 0; i < std::min<Index>(2, dim); ++i)
            keep.push_back(i);
    for (Index k : keep)
        if (k < 0 || k >= dim)
            throw SchemaError("polytope: keep index out of range.");
    return keep;
}

RowMatrix selection_matrix(Index n, const std::vector<Index>& keep)
{
    RowMatrix M = RowMatrix::Zero(static_cast<Index>(keep.size()), n);
    for (std::size_t i = 0; i < keep.size(); ++i)
        M(static_cast<Index>(i), keep[i]) = 1.0;
    return M;
}

// ---- commands ----

struct ForArgs
{
    std::string case_path;
    int horizon = -1;
    std::string mode = "lossless";
    std::string select = "root_pq";
    std::string bounds = "exact";
    bool parallel = false;
    unsigned threads = 0;
    std::string out;
    std::string format = "json";
    Index directions = default_hull_directions;
};

int cmd_for(const ForArgs& a)
{
    const GridCase c = load_case_file(a.case_path);
    const int N = resolve_horizon(c, a.horizon);
    ConversionConfig cfg = parse_bounds(a.bounds);
    cfg.parallel = a.parallel;
    cfg.threads = a.threads;
    const LossMode mode = parse_mode(a.mode);
    const auto selection = parse_selection(c, a.select);
    const ForResult r = compute_for(c, N, mode, selection, cfg);
    if (is_empty(r.projected))
        throw InfeasibleError("for: the feasible set is empty.");

    std::optional<Hull2D> hull;
    if (r.projected.dim() == 2)
        hull = hull_2d(r.projected, a.directions);

    if (a.format == "csv")
    {
        if (!hull)
            throw SchemaError("for: csv output needs a 2-D selection.");
        emit(a.out, hull_to_csv(selection, *hull));
        return exit_ok;
    }
    if (a.format != "json")
        throw SchemaError("for: unknown format '" + a.format + "'.");
    Json doc = for_to_json(selection, r.projected, hull ? &*hull : nullptr, r.report);
    doc["case"] = c.name;
    doc["horizon"] = N;
    doc["mode"] = to_string(mode);
    if (hull)
        doc["area"] = polygon_area(hull->vertices);
    emit(a.out, doc.dump(1) + "\n");
    return exit_ok;
}

struct CompareArgs
{
    std::string path;
    int horizon = -1;
    std::string mode = "lossless";
    Index row_cap = default_fm_row_cap;
    Index prune_every = 1;
    Index directions = 360;
    std::string out;
};

int cmd_compare(const CompareArgs& a)
{
    Json doc{{"schema", "flexcz-compare/1"}};
    ConstrainedZonotope cz;
    ConversionReport rep;
    HPolytope fm;
    FmStats st;
    FmOptions fopt;
    fopt.row_cap = a.row_cap;
    fopt.prune_every = a.prune_every;

    if (is_polytope_document(a.path))
    {
        const HPolytope P = load_polytope(a.path);
        const auto keep = polytope_keep(a.path, P.dim());
        Conversion conv = polytope_to_cz(P, ConversionConfig::exact());
        const auto t0 = detail::Clock::now();
        cz = linear_map(conv.cz, selection_matrix(P.dim(), keep));
        conv.report.projection_seconds = detail::seconds_since(t0);
        rep = conv.report;
        fm = project_polytope(P, keep, fopt, &st);
        doc["input"] = "polytope";
        doc["keep"] = keep;
    }
    else
    {
        const GridCase c = load_case_file(a.path);
        const int N = resolve_horizon(c, a.horizon);
        const LossMode mode = parse_mode(a.mode);
        const auto selection = root_pq_names(c, 1);
        const ForResult r = compute_for(c, N, mode, selection, ConversionConfig::exact());
        cz = r.projected;
        rep = r.report;
        const std::vector<Index> keep{r.feasible.index.at(selection[0]), r.feasible.index.at(selection[1])};
        fm = project_polytope(r.feasible.polytope, keep, fopt, &st);
        doc["input"] = "case";
        doc["case"] = c.name;
        doc["horizon"] = N;
        doc["mode"] = to_string(mode);
        doc["selection"] = selection;
    }

    const double mismatch = max_relative_mismatch(cz, fm, a.directions);
    const double cz_total = rep.offline_seconds + rep.online_seconds + rep.projection_seconds;
    doc["max_relative_mismatch"] = mismatch;
    doc["tolerance"] = mismatch_tol;
    doc["match"] = mismatch <= mismatch_tol;
    doc["cz_report"] = to_json(rep);
    doc["cz_total_seconds"] = cz_total;
    doc["fm_seconds"] = st.seconds;
    doc["fm_peak_rows"] = st.peak_rows;
    doc["fm_rows"] = fm.num_ineq();
    emit(a.out, doc.dump(1) + "\n");
    return mismatch <= mismatch_tol ? exit_ok : exit_mismatch;
}

struct BenchArgs
{
    std::string case_path;
    std::string horizons = "12";
    int repeats = 10;
    std::string mode = "lossless";
    bool parallel = false;
    std::string format = "json";
    std::string out;
};

int cmd_bench(const BenchArgs& a)
{
    const GridCase c = load_case_file(a.case_path);
    const LossMode mode = parse_mode(a.mode);
    if (a.repeats < 1)
        throw SchemaError("bench: repeats must be at least 1.");
    ConversionConfig cfg;
    cfg.parallel = a.parallel;

    Json rows = Json::array();
    for (const auto& hs : split(a.horizons, ','))
    {
        int N = 0;
        try
        {
            N = std::stoi(hs);
        }
        catch (const std::exception&)
        {
            throw SchemaError("bench: bad horizon '" + hs + "'.");
        }
        c.check_horizon(N);
        double off = 0.0, on = 0.0, proj = 0.0, ins = 0.0, ins_checked = 0.0;
        ConversionReport last;
        for (int k = 0; k < a.repeats; ++k)
        {
            const ForResult r = compute_for(c, N, mode, root_pq_names(c, 1), cfg);
            off += r.report.offline_seconds;
            on += r.report.online_seconds;
            proj += r.report.projection_seconds;
            last = r.report;

            // revised forecast: halve the first generator's upper limit at k = 1
            if (!c.generators.empty())
            {
                const double f = c.generators.front().f_max.at(1);
                const std::vector<LinearConstraint> row{generator_bound_rows(r.feasible.index, 0, 1, 0.5 * f)[1]};
                ins += update_with_constraints(r.conversion.cz, row, false).seconds;
                ins_checked += update_with_constraints(r.conversion.cz, row, true).seconds;
            }
        }
        const double R = a.repeats;
        rows.push_back(Json{{"horizon", N}, {"repeats", a.repeats}, {"offline_seconds", off / R},
            {"online_seconds", on / R}, {"projection_seconds", proj / R}, {"total_seconds", (off + on + proj) / R},
            {"insertion_seconds", ins / R}, {"checked_insertion_seconds", ins_checked / R}, {"n", last.n},
            {"n_g", last.n_g}, {"m", last.m}});
    }

    if (a.format == "csv")
    {
        std::string text = "horizon,repeats,offline_seconds,online_seconds,projection_seconds,total_seconds,"
                           "insertion_seconds,checked_insertion_seconds,n,n_g,m\n";
        char buf[512];
        for (const auto& r : rows)
        {
            std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%lld,%lld\n", r["horizon"].get<int>(),
                r["repeats"].get<int>(), r["offline_seconds"].get<double>(), r["online_seconds"].get<double>(),
                r["projection_seconds"].get<double>(), r["total_seconds"].get<double>(),
                r["insertion_seconds"].get<double>(), r["checked_insertion_seconds"].get<double>(),
                r["n"].get<long long>(), r["n_g"].get<long long>(),
                r["m"].get<long long>());
            text += buf;
        }
        emit(a.out, text);
        return exit_ok;
    }
    if (a.format != "json")
        throw SchemaError("bench: unknown format '" + a.format + "'.");
    const Json doc{{"schema", "flexcz-bench/1"}, {"case", c.name}, {"mode", to_string(mode)}, {"rows", rows}};
    emit(a.out, doc.dump(1) + "\n");
    return exit_ok;
}

struct SliceArgs
{
    std::string case_path;
    int horizon = -1;
    std::string mode = "lossless";
    std::string p1 = "auto:5";
    bool parallel = false;
    Index directions = default_hull_directions;
    std::string out;
};

int cmd_slice(const SliceArgs& a)
{
    const GridCase c = load_case_file(a.case_path);
    const int N = resolve_horizon(c, a.horizon);
    if (N < 2)
        throw SchemaError("slice: needs a horizon of at least 2.");
    ConversionConfig cfg;
    cfg.parallel = a.parallel;
    const LossMode mode = parse_mode(a.mode);
    const auto selection = parse_selection(c, "root_p3");
    const ForResult r = compute_for(c, N, mode, selection, cfg);
    const auto [lo, hi] = coordinate_range(r.projected, 0);

    std::vector<double> values;
    if (a.p1.rfind("auto:", 0) == 0)
    {
        const int count = std::stoi(a.p1.substr(5));
        if (count < 1)
            throw SchemaError("slice: auto needs a positive count.");
        for (int k = 0; k < count; ++k)
            values.push_back(count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1));
    }
    else
    {
        for (const auto& s : split(a.p1, ','))
        {
            try
            {
                values.push_back(std::stod(s));
            }
            catch (const std::exception&)
            {
                throw SchemaError("slice: bad p1 value '" + s + "'.");
            }
        }
    }

    Json slices = Json::array();
    for (double v : values)
    {
        const ConstrainedZonotope s = conditional_for(r.projected, v);
        const Hull2D h = hull_2d(s, a.directions);
        Json verts = Json::array();
        for (const auto& p : h.vertices)
            verts.push_back(Json::array({p.x(), p.y()}));
        slices.push_back(Json{{"p1", v}, {"area", polygon_area(h.vertices)}, {"vertices", verts}});
    }
    const Json doc{{"schema", "flexcz-slices/1"}, {"case", c.name}, {"horizon", N}, {"mode", to_string(mode)},
        {"selection", selection}, {"p1_interval", Json::array({lo, hi})}, {"slices", slices},
        {"report", to_json(r.report)}};
    emit(a.out, doc.dump(1) + "\n");
    return exit_ok;
}

struct ConvertArgs
{
    std::string path;
    bool parallel = false;
    std::string out;
};

int cmd_convert(const ConvertArgs& a)
{
    const HPolytope P = load_polytope(a.path);
    ConversionConfig cfg;
    cfg.parallel = a.parallel;
    const Conversion conv = polytope_to_cz(P, cfg);
    emit(a.out, dump_cz(conv.cz) + "\n");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Feasible operation regions of distribution grids via constrained zonotopes"};
    app.require_subcommand(1);

    ForArgs fa;
    auto* f = app.add_subcommand("for", "Compute the FOR of a case");
    f->add_option("case", fa.case_path, "Case file (flexcz-case/1)")->required();
    f->add_option("--horizon", fa.horizon, "Number of timesteps (default: case horizon)");
    f->add_option("--mode", fa.mode, "lossless or loss-ll");
    f->add_option("--select", fa.select, "root_pq, root_pq:k, root_p3 or comma-separated variable names");
    f->add_option("--bounds", fa.bounds, "exact or enlarged:F");
    f->add_flag("--parallel", fa.parallel, "Parallel offline conversion");
    f->add_option("--threads", fa.threads, "Worker count for --parallel");
    f->add_option("--out", fa.out, "Output file (default: stdout)");
    f->add_option("--format", fa.format, "json or csv");
    f->add_option("--directions", fa.directions, "Support directions for the hull");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Compare the CZ pipeline with Fourier-Motzkin projection");
    cmp->add_option("input", ca.path, "Case file or polytope file")->required();
    cmp->add_option("--horizon", ca.horizon, "Number of timesteps (cases only)");
    cmp->add_option("--mode", ca.mode, "lossless or loss-ll");
    cmp->add_option("--row-cap", ca.row_cap, "Fourier-Motzkin row cap");
    cmp->add_option("--prune-every", ca.prune_every, "Redundancy removal interval (0: final pass only)");
    cmp->add_option("--directions", ca.directions, "Support directions");
    cmp->add_option("--out", ca.out, "Output file (default: stdout)");

    BenchArgs ba;
    auto* b = app.add_subcommand("bench", "Offline/online/insertion timings per horizon");
    b->add_option("case", ba.case_path, "Case file")->required();
    b->add_option("--horizons", ba.horizons, "Comma-separated horizons");
    b->add_option("--repeats", ba.repeats, "Runs averaged per horizon");
    b->add_option("--mode", ba.mode, "lossless or loss-ll");
    b->add_flag("--parallel", ba.parallel, "Parallel offline conversion");
    b->add_option("--format", ba.format, "json or csv");
    b->add_option("--out", ba.out, "Output file (default: stdout)");

    SliceArgs sa;
    auto* s = app.add_subcommand("slice", "Conditional FORs of (p(2), q(2)) for fixed p(1)");
    s->add_option("case", sa.case_path, "Case file")->required();
    s->add_option("--horizon", sa.horizon, "Number of timesteps (at least 2)");
    s->add_option("--mode", sa.mode, "lossless or loss-ll");
    s->add_option("--p1", sa.p1, "auto:COUNT or comma-separated values");
    s->add_flag("--parallel", sa.parallel, "Parallel offline conversion");
    s->add_option("--directions", sa.directions, "Support directions per hull");
    s->add_option("--out", sa.out, "Output file (default: stdout)");

    ConvertArgs va;
    auto* v = app.add_subcommand("convert", "Polytope JSON to constrained zonotope JSON");
    v->add_option("polytope", va.path, "Polytope file (flexcz-polytope/1)")->required();
    v->add_flag("--parallel", va.parallel, "Parallel offline conversion");
    v->add_option("--out", va.out, "Output file (default: stdout)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        return report_error("usage", e.what(), exit_schema);
    }

    try
    {
        if (f->parsed())
            return cmd_for(fa);
        if (cmp->parsed())
            return cmd_compare(ca);
        if (b->parsed())
            return cmd_bench(ba);
        if (s->parsed())
            return cmd_slice(sa);
        if (v->parsed())
            return cmd_convert(va);
    }
    catch (const Error& e)
    {
        return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
    }
    catch (const Json::exception& e)
    {
        return report_error("schema", e.what(), exit_schema);
    }
    catch (const std::invalid_argument& e)
    {
        return report_error("schema", e.what(), exit_schema);
    }
    catch (const std::exception& e)
    {
        return report_error("numerical", e.what(), exit_numerical);
    }
    return exit_ok;
}
