#ifndef FLEXCZ_GRID_HPP_
#define FLEXCZ_GRID_HPP_

/**
 * @file grid.hpp
 * @brief Radial grid cases and the multi-period LinDistFlow feasible set.
 *
 * Conventions: all quantities are per-unit on base_mva, energies are
 * p.u.*h, dt is in hours. Branch flows are oriented parent -> child from the
 * root, so a positive flow on the coupling branch is an import from the
 * upstream grid. Storage power is positive when discharging.
 */

#include "error.hpp"
#include "polytope.hpp"
#include "types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace flexcz
{

/// Per-timestep data: one value (broadcast) or one value per step.
class Series
{
    public:
        Series() = default;
        Series(double v) : values_{v} {}
        Series(std::vector<double> v) : values_(std::move(v)) {}

        // k is 1-based
        double at(int k) const
        {
            if (values_.size() == 1)
                return values_[0];
            return values_[static_cast<std::size_t>(k - 1)];
        }

        bool is_scalar() const { return values_.size() == 1; }
        std::size_t length() const { return values_.size(); }
        const std::vector<double>& values() const { return values_; }

        Series scaled(double f) const
        {
            std::vector<double> v = values_;
            for (double& x : v)
                x *= f;
            return Series(std::move(v));
        }

    private:
        std::vector<double> values_{0.0};
};

struct Bus
{
    int id = 0;
    double v_min = 0.81;
    double v_max = 1.21;
    Series p_demand;
    Series q_demand;
};

struct Branch
{
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double l_min = 0.0;
    double l_max = 1.0;
};

struct Generator
{
    int bus = 0;
    Series f_max;
    Series s_max;
    double alpha_pf = 0.95;
};

struct Storage
{
    int bus = 0;
    double e_min = 0.0;
    double e_max = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
    double e0 = 0.0;
};

struct GridCase
{
    std::string name;
    double base_mva = 1.0;
    double dt = 1.0;
    int horizon = 1;
    int root = 0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;       // oriented parent -> child after validation
    std::vector<Generator> generators;
    std::vector<Storage> storages;

    // topology, filled by finalize()
    std::vector<int> parent_branch;     // per bus index, -1 at the root
    std::vector<std::vector<int>> child_branches;
    std::vector<int> gen_at;            // per bus index, -1 if none
    std::vector<int> storage_at;
    std::vector<int> order;             // bus indices, root first (BFS)
    int root_index = -1;
    int coupling_branch = -1;

    int bus_index(int id) const
    {
        const auto it = std::find_if(buses.begin(), buses.end(), [id](const Bus& b) { return b.id == id; });
        if (it == buses.end())
            throw SchemaError("case: unknown bus id " + std::to_string(id) + ".");
        return static_cast<int>(it - buses.begin());
    }

    /// Longest per-step series in the case (1 if everything is scalar).
    std::size_t series_length() const
    {
        std::size_t L = 1;
        auto take = [&L](const Series& s) { L = std::max(L, s.length()); };
        for (const auto& b : buses)
        {
            take(b.p_demand);
            take(b.q_demand);
        }
        for (const auto& g : generators)
        {
            take(g.f_max);
            take(g.s_max);
        }
        return L;
    }

    void check_horizon(int N) const
    {
        if (N < 1)
            throw SchemaError("case: horizon must be at least 1 (got " + std::to_string(N) + ").");
        const std::size_t L = series_length();
        if (L > 1 && static_cast<std::size_t>(N) > L)
            throw SchemaError("case: horizon " + std::to_string(N) + " exceeds the series length "
                + std::to_string(L) + ".");
    }

    /// Validates data and builds the rooted tree. Called by load_case.
    void finalize()
    {
        if (!(base_mva > 0.0))
            throw SchemaError("case: base_mva must be positive.");
        if (!(dt > 0.0))
            throw SchemaError("case: dt must be positive.");
        if (buses.empty())
            throw SchemaError("case: no buses.");

        const std::size_t nb = buses.size();
        std::set<int> ids;
        for (const auto& b : buses)
        {
            if (!ids.insert(b.id).second)
                throw SchemaError("case: duplicate bus id " + std::to_string(b.id) + ".");
            if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max))
                throw SchemaError("case: bus " + std::to_string(b.id) + " needs 0 < v_min <= v_max.");
        }
        root_index = bus_index(root);

        if (branches.size() + 1 != nb)
            throw SchemaError("case: a radial grid needs exactly one branch less than buses ("
                + std::to_string(nb) + " buses, " + std::to_string(branches.size()) + " branches).");

        std::vector<std::vector<std::pair<int, int>>> adj(nb);    // (neighbour, branch)
        for (std::size_t i = 0; i < branches.size(); ++i)
        {
            const auto& br = branches[i];
            if (br.r < 0.0 || br.x < 0.0)
                throw SchemaError("case: branch " + std::to_string(br.from) + "-" + std::to_string(br.to)
                    + " has negative impedance.");
            if (br.l_min < 0.0 || br.l_min > br.l_max)
                throw SchemaError("case: branch " + std::to_string(br.from) + "-" + std::to_string(br.to)
                    + " needs 0 <= l_min <= l_max.");
            const int a = bus_index(br.from);
            const int b = bus_index(br.to);
            if (a == b)
                throw SchemaError("case: self-loop at bus " + std::to_string(br.from) + ".");
            adj[static_cast<std::size_t>(a)].push_back({b, static_cast<int>(i)});
            adj[static_cast<std::size_t>(b)].push_back({a, static_cast<int>(i)});
        }

        parent_branch.assign(nb, -1);
        child_branches.assign(nb, {});
        order.clear();
        std::vector<char> seen(nb, 0);
        std::queue<int> bfs;
        bfs.push(root_index);
        seen[static_cast<std::size_t>(root_index)] = 1;
        while (!bfs.empty())
        {
            const int u = bfs.front();
            bfs.pop();
            order.push_back(u);
            for (const auto& [v, bi] : adj[static_cast<std::size_t>(u)])
            {
                if (seen[static_cast<std::size_t>(v)])
                {
                    if (bi != parent_branch[static_cast<std::size_t>(u)])
                        throw SchemaError("case: the branch graph contains a cycle.");
                    continue;
                }
                seen[static_cast<std::size_t>(v)] = 1;
                auto& br = branches[static_cast<std::size_t>(bi)];
                if (bus_index(br.from) != u)
                    std::swap(br.from, br.to);
                parent_branch[static_cast<std::size_t>(v)] = bi;
                child_branches[static_cast<std::size_t>(u)].push_back(bi);
                bfs.push(v);
            }
        }
        if (order.size() != nb)
            throw SchemaError("case: the branch graph is not connected to the root bus.");

        const auto& rb = buses[static_cast<std::size_t>(root_index)];
        if (rb.p_demand.values() != std::vector<double>(rb.p_demand.length(), 0.0)
            || rb.q_demand.values() != std::vector<double>(rb.q_demand.length(), 0.0))
            throw SchemaError("case: the root bus must not carry demand.");

        gen_at.assign(nb, -1);
        for (std::size_t g = 0; g < generators.size(); ++g)
        {
            const auto& gen = generators[g];
            const int bi = bus_index(gen.bus);
            if (bi == root_index)
                throw SchemaError("case: generator at the root bus.");
            if (gen_at[static_cast<std::size_t>(bi)] >= 0)
                throw SchemaError("case: more than one generator at bus " + std::to_string(gen.bus) + ".");
            gen_at[static_cast<std::size_t>(bi)] = static_cast<int>(g);
            if (!(gen.alpha_pf > 0.0))
                throw SchemaError("case: generator at bus " + std::to_string(gen.bus) + " needs alpha_pf > 0.");
            for (double v : gen.f_max.values())
                if (v < 0.0)
                    throw SchemaError("case: negative f_max at bus " + std::to_string(gen.bus) + ".");
            for (double v : gen.s_max.values())
                if (v < 0.0)
                    throw SchemaError("case: negative s_max at bus " + std::to_string(gen.bus) + ".");
        }

        storage_at.assign(nb, -1);
        for (std::size_t s = 0; s < storages.size(); ++s)
        {
            const auto& st = storages[s];
            const int bi = bus_index(st.bus);
            if (bi == root_index)
                throw SchemaError("case: storage at the root bus.");
            if (storage_at[static_cast<std::size_t>(bi)] >= 0)
                throw SchemaError("case: more than one storage unit at bus " + std::to_string(st.bus) + ".");
            storage_at[static_cast<std::size_t>(bi)] = static_cast<int>(s);
            if (!(st.e_min <= st.e0 && st.e0 <= st.e_max))
                throw SchemaError("case: storage at bus " + std::to_string(st.bus) + " needs e_min <= e0 <= e_max.");
            if (!(st.p_min <= 0.0 && 0.0 <= st.p_max))
                throw SchemaError("case: storage at bus " + std::to_string(st.bus) + " needs p_min <= 0 <= p_max.");
        }

        // every non-scalar series must share one length
        std::size_t L = 0;
        auto check = [&L](const Series& s, const std::string& what) {
            if (s.length() == 0)
                throw SchemaError("case: empty series " + what + ".");
            if (s.is_scalar())
                return;
            if (L == 0)
                L = s.length();
            else if (s.length() != L)
                throw SchemaError("case: inconsistent series lengths (" + what + " has "
                    + std::to_string(s.length()) + ", expected " + std::to_string(L) + ").");
        };
        for (const auto& b : buses)
        {
            check(b.p_demand, "p_demand of bus " + std::to_string(b.id));
            check(b.q_demand, "q_demand of bus " + std::to_string(b.id));
        }
        for (const auto& g : generators)
        {
            check(g.f_max, "f_max at bus " + std::to_string(g.bus));
            check(g.s_max, "s_max at bus " + std::to_string(g.bus));
        }

        const auto& kids = child_branches[static_cast<std::size_t>(root_index)];
        coupling_branch = kids.size() == 1 ? kids[0] : -1;
        check_horizon(horizon);
    }

    std::string branch_label(int b) const
    {
        const auto& br = branches[static_cast<std::size_t>(b)];
        return std::to_string(br.from) + "_" + std::to_string(br.to);
    }
};

// ---- case document ----

namespace detail
{

inline double number(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        throw SchemaError("case: " + where + " is missing '" + key + "'.");
    if (!j.at(key).is_number())
        throw SchemaError("case: " + where + "." + key + " must be a number.");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v))
        throw SchemaError("case: " + where + "." + key + " must be finite.");
    return v;
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback, const std::string& where)
{
    return j.contains(key) ? number(j, key, where) : fallback;
}

inline int integer(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw SchemaError("case: " + where + "." + key + " must be an integer.");
    return j.at(key).get<int>();
}

inline Series series(const nlohmann::json& j, const char* key, double fallback, const std::string& where)
{
    if (!j.contains(key))
        return Series(fallback);
    const auto& v = j.at(key);
    if (v.is_number())
        return Series(v.get<double>());
    if (!v.is_array() || v.empty())
        throw SchemaError("case: " + where + "." + key + " must be a number or a non-empty array of numbers.");
    std::vector<double> out;
    for (const auto& e : v)
    {
        if (!e.is_number())
            throw SchemaError("case: " + where + "." + key + " must contain numbers only.");
        out.push_back(e.get<double>());
    }
    return Series(std::move(out));
}

inline const nlohmann::json& array_field(const nlohmann::json& j, const char* key, bool required)
{
    static const nlohmann::json empty = nlohmann::json::array();
    if (!j.contains(key))
    {
        if (required)
            throw SchemaError(std::string("case: missing '") + key + "'.");
        return empty;
    }
    if (!j.at(key).is_array())
        throw SchemaError(std::string("case: '") + key + "' must be an array.");
    return j.at(key);
}

} // namespace detail

inline constexpr const char* case_schema_id = "flexcz-case/1";

inline GridCase load_case(const nlohmann::json& doc)
{
    using namespace detail;
    if (!doc.is_object())
        throw SchemaError("case: document must be a JSON object.");
    if (!doc.contains("schema") || doc.at("schema") != case_schema_id)
        throw SchemaError(std::string("case: 'schema' must be \"") + case_schema_id + "\".");

    GridCase c;
    c.name = doc.value("name", std::string{});
    c.base_mva = number_or(doc, "base_mva", 1.0, "case");
    c.dt = number_or(doc, "dt", 1.0, "case");
    c.horizon = doc.contains("horizon") ? integer(doc, "horizon", "case") : 1;
    c.root = integer(doc, "root", "case");
    const double alpha_default = number_or(doc, "alpha_pf", 0.95, "case");

    for (const auto& jb : array_field(doc, "buses", true))
    {
        Bus b;
        b.id = integer(jb, "id", "bus");
        const std::string w = "bus " + std::to_string(b.id);
        b.v_min = number(jb, "v_min", w);
        b.v_max = number(jb, "v_max", w);
        b.p_demand = series(jb, "p_demand", 0.0, w);
        b.q_demand = series(jb, "q_demand", 0.0, w);
        c.buses.push_back(std::move(b));
    }
    for (const auto& jb : array_field(doc, "branches", true))
    {
        Branch br;
        br.from = integer(jb, "from", "branch");
        br.to = integer(jb, "to", "branch");
        const std::string w = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
        br.r = number(jb, "r", w);
        br.x = number(jb, "x", w);
        br.l_min = number_or(jb, "l_min", 0.0, w);
        br.l_max = number(jb, "l_max", w);
        c.branches.push_back(br);
    }
    for (const auto& jg : array_field(doc, "generators", false))
    {
        Generator g;
        g.bus = integer(jg, "bus", "generator");
        const std::string w = "generator at bus " + std::to_string(g.bus);
        if (!jg.contains("f_max") || !jg.contains("s_max"))
            throw SchemaError("case: " + w + " needs f_max and s_max.");
        g.f_max = series(jg, "f_max", 0.0, w);
        g.s_max = series(jg, "s_max", 0.0, w);
        g.alpha_pf = number_or(jg, "alpha_pf", alpha_default, w);
        c.generators.push_back(std::move(g));
    }
    for (const auto& js : array_field(doc, "storages", false))
    {
        Storage s;
        s.bus = integer(js, "bus", "storage");
        const std::string w = "storage at bus " + std::to_string(s.bus);
        s.e_min = number(js, "e_min", w);
        s.e_max = number(js, "e_max", w);
        s.p_min = number(js, "p_min", w);
        s.p_max = number(js, "p_max", w);
        s.e0 = number(js, "e0", w);
        c.storages.push_back(s);
    }
    c.finalize();
    return c;
}

inline GridCase load_case_text(const std::string& text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw SchemaError(std::string("case: invalid JSON: ") + e.what());
    }
    return load_case(doc);
}

inline GridCase load_case_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("case: cannot open '" + path + "'.");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_case_text(ss.str());
}

inline GridCase without_storage(GridCase c)
{
    c.storages.clear();
    c.finalize();
    return c;
}

// ---- variable index ----

/// Bijection between named grid quantities and decision-vector coordinates.
/// Layout: per branch p(1..N), q(1..N), l(1..N); per bus v(1..N); per
/// generator pg(1..N), qg(1..N); per storage ps(1..N), e(1..N+1).
class VariableIndex
{
    public:
        VariableIndex() = default;

        VariableIndex(const GridCase& c, int N)
            : N_(N), nbr_(static_cast<int>(c.branches.size())), nbus_(static_cast<int>(c.buses.size())),
              ngen_(static_cast<int>(c.generators.size())), nst_(static_cast<int>(c.storages.size()))
        {
            off_bus_ = 3 * N_ * nbr_;
            off_gen_ = off_bus_ + N_ * nbus_;
            off_st_ = off_gen_ + 2 * N_ * ngen_;
            size_ = off_st_ + (2 * N_ + 1) * nst_;

            names_.resize(static_cast<std::size_t>(size_));
            auto k_str = [](int k) { return "(" + std::to_string(k) + ")"; };
            for (int b = 0; b < nbr_; ++b)
            {
                const std::string lbl = c.branch_label(b);
                for (int k = 1; k <= N_; ++k)
                {
                    set_name(p(b, k), "p_" + lbl + k_str(k));
                    set_name(q(b, k), "q_" + lbl + k_str(k));
                    set_name(l(b, k), "l_" + lbl + k_str(k));
                }
            }
            for (int i = 0; i < nbus_; ++i)
                for (int k = 1; k <= N_; ++k)
                    set_name(v(i, k), "v_" + std::to_string(c.buses[static_cast<std::size_t>(i)].id) + k_str(k));
            for (int g = 0; g < ngen_; ++g)
            {
                const std::string id = std::to_string(c.generators[static_cast<std::size_t>(g)].bus);
                for (int k = 1; k <= N_; ++k)
                {
                    set_name(pg(g, k), "pg_" + id + k_str(k));
                    set_name(qg(g, k), "qg_" + id + k_str(k));
                }
            }
            for (int s = 0; s < nst_; ++s)
            {
                const std::string id = std::to_string(c.storages[static_cast<std::size_t>(s)].bus);
                for (int k = 1; k <= N_; ++k)
                    set_name(ps(s, k), "ps_" + id + k_str(k));
                for (int k = 1; k <= N_ + 1; ++k)
                    set_name(e(s, k), "e_" + id + k_str(k));
            }
        }

        Index size() const { return size_; }
        int horizon() const { return N_; }

        Index p(int b, int k) const { return static_cast<Index>(3 * N_ * b + (k - 1)); }
        Index q(int b, int k) const { return static_cast<Index>(3 * N_ * b + N_ + (k - 1)); }
        Index l(int b, int k) const { return static_cast<Index>(3 * N_ * b + 2 * N_ + (k - 1)); }
        Index v(int bus, int k) const { return static_cast<Index>(off_bus_ + N_ * bus + (k - 1)); }
        Index pg(int g, int k) const { return static_cast<Index>(off_gen_ + 2 * N_ * g + (k - 1)); }
        Index qg(int g, int k) const { return static_cast<Index>(off_gen_ + 2 * N_ * g + N_ + (k - 1)); }
        Index ps(int s, int k) const { return static_cast<Index>(off_st_ + (2 * N_ + 1) * s + (k - 1)); }
        Index e(int s, int k) const { return static_cast<Index>(off_st_ + (2 * N_ + 1) * s + N_ + (k - 1)); }

        const std::string& name(Index i) const { return names_.at(static_cast<std::size_t>(i)); }
        const std::vector<std::string>& names() const { return names_; }

        Index at(const std::string& name) const
        {
            const auto it = lookup_.find(name);
            if (it == lookup_.end())
                throw DimensionError("unknown quantity '" + name + "'.");
            return it->second;
        }

        bool contains(const std::string& name) const { return lookup_.count(name) > 0; }

    private:
        void set_name(Index i, std::string s)
        {
            lookup_[s] = i;
            names_[static_cast<std::size_t>(i)] = std::move(s);
        }

        int N_ = 0, nbr_ = 0, nbus_ = 0, ngen_ = 0, nst_ = 0;
        int off_bus_ = 0, off_gen_ = 0, off_st_ = 0, size_ = 0;
        std::vector<std::string> names_;
        std::unordered_map<std::string, Index> lookup_;
};

// ---- operating point ----

/// Linearization point per branch and step (row = branch, column = k-1).
struct OperatingPoint
{
    Eigen::MatrixXd p0, q0, v0, l0;     // v0 is the receiving-bus squared voltage
};

/// Lossless LinDistFlow solution with generators at half forecast, zero
/// reactive generation and idle storage.
inline OperatingPoint nominal_operating_point(const GridCase& c, int N)
{
    c.check_horizon(N);
    const auto nb = static_cast<Index>(c.branches.size());
    OperatingPoint op;
    op.p0 = Eigen::MatrixXd::Zero(nb, N);
    op.q0 = Eigen::MatrixXd::Zero(nb, N);
    op.v0 = Eigen::MatrixXd::Zero(nb, N);
    op.l0 = Eigen::MatrixXd::Zero(nb, N);

    const auto& root = c.buses[static_cast<std::size_t>(c.root_index)];
    const double v_root = std::clamp(1.0, root.v_min, root.v_max);

    std::vector<double> pload(c.buses.size()), qload(c.buses.size()), vbus(c.buses.size());
    for (int k = 1; k <= N; ++k)
    {
        for (std::size_t i = 0; i < c.buses.size(); ++i)
        {
            pload[i] = c.buses[i].p_demand.at(k);
            qload[i] = c.buses[i].q_demand.at(k);
            if (c.gen_at[i] >= 0)
                pload[i] -= 0.5 * c.generators[static_cast<std::size_t>(c.gen_at[i])].f_max.at(k);
        }
        // accumulate subtree loads leaves-first
        for (auto it = c.order.rbegin(); it != c.order.rend(); ++it)
        {
            const int u = *it;
            const int pb = c.parent_branch[static_cast<std::size_t>(u)];
            if (pb < 0)
                continue;
            double ps = pload[static_cast<std::size_t>(u)], qs = qload[static_cast<std::size_t>(u)];
            for (int cb : c.child_branches[static_cast<std::size_t>(u)])
            {
                ps += op.p0(cb, k - 1);
                qs += op.q0(cb, k - 1);
            }
            op.p0(pb, k - 1) = ps;
            op.q0(pb, k - 1) = qs;
        }
        vbus[static_cast<std::size_t>(c.root_index)] = v_root;
        for (int u : c.order)
        {
            for (int cb : c.child_branches[static_cast<std::size_t>(u)])
            {
                const auto& br = c.branches[static_cast<std::size_t>(cb)];
                const int w = c.bus_index(br.to);
                const double vw = vbus[static_cast<std::size_t>(u)] - 2.0 * (br.r * op.p0(cb, k - 1) + br.x * op.q0(cb, k - 1));
                if (!(vw > 0.0))
                    throw NumericalError("nominal_operating_point: non-positive squared voltage at bus "
                        + std::to_string(br.to) + ".");
                vbus[static_cast<std::size_t>(w)] = vw;
                op.v0(cb, k - 1) = vw;
                op.l0(cb, k - 1) = (op.p0(cb, k - 1) * op.p0(cb, k - 1) + op.q0(cb, k - 1) * op.q0(cb, k - 1)) / vw;
            }
        }
    }
    return op;
}

/// Flat start: unit voltages, zero flows and hence zero losses. Linearizing
/// around it reproduces the lossless model.
inline OperatingPoint flat_operating_point(const GridCase& c, int N)
{
    c.check_horizon(N);
    const auto nb = static_cast<Index>(c.branches.size());
    return {Eigen::MatrixXd::Zero(nb, N), Eigen::MatrixXd::Zero(nb, N), Eigen::MatrixXd::Ones(nb, N),
        Eigen::MatrixXd::Zero(nb, N)};
}

// ---- feasible set ----

enum class LossMode
{
    lossless,
    loss_linearized,
};

inline const char* to_string(LossMode m)
{
    return m == LossMode::lossless ? "lossless" : "loss-ll";
}

/// Row tags emitted by build_feasible_set.
namespace tags
{
inline constexpr const char* flow_p = "flow_p";
inline constexpr const char* flow_q = "flow_q";
inline constexpr const char* voltage_drop = "voltage_drop";
inline constexpr const char* loss = "loss";
inline constexpr const char* voltage_bound = "voltage_bound";
inline constexpr const char* current_bound = "current_bound";
inline constexpr const char* gen_bound = "gen_bound";
inline constexpr const char* gen_apparent = "gen_apparent";
inline constexpr const char* gen_power_factor = "gen_power_factor";
inline constexpr const char* storage_energy = "storage_energy";
inline constexpr const char* storage_power = "storage_power";
inline constexpr const char* storage_dynamics = "storage_dynamics";
inline constexpr const char* storage_initial = "storage_initial";
} // namespace tags

struct FeasibleSet
{
    HPolytope polytope;
    VariableIndex index;
    Bounds apriori;         // valid (not tight) box derived from the case data
    int horizon = 0;
    LossMode mode = LossMode::lossless;
};

namespace detail
{

// sparse row builder for one constraint
class RowBuilder
{
    public:
        explicit RowBuilder(Index n) : h_(Vector::Zero(n)) {}
        RowBuilder& add(Index j, double a)
        {
            h_[j] += a;
            return *this;
        }
        const Vector& h() const { return h_; }

    private:
        Vector h_;
};

} // namespace detail

/// Generator bound rows (0 <= pg(k) <= f_max) for one generator and step,
/// in the order the builder emits them.
inline std::vector<LinearConstraint> generator_bound_rows(const VariableIndex& idx, int g, int k, double f_max)
{
    Vector h = Vector::Zero(idx.size());
    h[idx.pg(g, k)] = -1.0;
    std::vector<LinearConstraint> out;
    out.push_back(LinearConstraint::halfspace(h, 0.0));
    h[idx.pg(g, k)] = 1.0;
    out.push_back(LinearConstraint::halfspace(h, f_max));
    return out;
}

inline FeasibleSet build_feasible_set(const GridCase& c, int N, LossMode mode,
    const OperatingPoint* op = nullptr)
{
    c.check_horizon(N);
    if (mode == LossMode::loss_linearized && op == nullptr)
        throw SchemaError("build_feasible_set: loss-linearized mode requires an operating point.");
    if (op != nullptr && (op->p0.cols() < N || op->p0.rows() != static_cast<Index>(c.branches.size())))
        throw DimensionError("build_feasible_set: operating point does not match the case and horizon.");

    FeasibleSet fs;
    fs.index = VariableIndex(c, N);
    fs.horizon = N;
    fs.mode = mode;
    const VariableIndex& ix = fs.index;
    const Index n = ix.size();
    HPolytope& P = fs.polytope;
    P = HPolytope(n);

    auto eq = [&](const detail::RowBuilder& r, double rhs, const char* tag) { P.add_eq(r.h(), rhs, tag); };
    auto le = [&](const detail::RowBuilder& r, double rhs, const char* tag) { P.add_ineq(r.h(), rhs, tag); };
    auto row = [n]() { return detail::RowBuilder(n); };

    for (int k = 1; k <= N; ++k)
    {
        for (int b = 0; b < static_cast<int>(c.branches.size()); ++b)
        {
            const auto& br = c.branches[static_cast<std::size_t>(b)];
            const int m = c.bus_index(br.from);
            const int l = c.bus_index(br.to);
            const auto& bus_l = c.buses[static_cast<std::size_t>(l)];
            const int g = c.gen_at[static_cast<std::size_t>(l)];
            const int s = c.storage_at[static_cast<std::size_t>(l)];

            // p_ml = sum_children p_lj - p_l + r l_ml with p_l = pg - pd + ps
            auto rp = row();
            rp.add(ix.p(b, k), 1.0).add(ix.l(b, k), -br.r);
            for (int cb : c.child_branches[static_cast<std::size_t>(l)])
                rp.add(ix.p(cb, k), -1.0);
            if (g >= 0) rp.add(ix.pg(g, k), 1.0);
            if (s >= 0) rp.add(ix.ps(s, k), 1.0);
            eq(rp, bus_l.p_demand.at(k), tags::flow_p);

            auto rq = row();
            rq.add(ix.q(b, k), 1.0).add(ix.l(b, k), -br.x);
            for (int cb : c.child_branches[static_cast<std::size_t>(l)])
                rq.add(ix.q(cb, k), -1.0);
            if (g >= 0) rq.add(ix.qg(g, k), 1.0);
            eq(rq, bus_l.q_demand.at(k), tags::flow_q);

            // v_m = v_l + 2(r p + x q) - (r^2 + x^2) l
            auto rv = row();
            rv.add(ix.v(m, k), 1.0).add(ix.v(l, k), -1.0)
              .add(ix.p(b, k), -2.0 * br.r).add(ix.q(b, k), -2.0 * br.x)
              .add(ix.l(b, k), br.r * br.r + br.x * br.x);
            eq(rv, 0.0, tags::voltage_drop);

            auto rl = row();
            rl.add(ix.l(b, k), 1.0);
            if (mode == LossMode::loss_linearized)
            {
                // first-order expansion of (p^2 + q^2)/v around the operating point;
                // the constant terms cancel exactly
                const double p0 = op->p0(b, k - 1), q0 = op->q0(b, k - 1), v0 = op->v0(b, k - 1);
                const double l0 = op->l0(b, k - 1);
                rl.add(ix.p(b, k), -2.0 * p0 / v0).add(ix.q(b, k), -2.0 * q0 / v0).add(ix.v(l, k), l0 / v0);
            }
            eq(rl, 0.0, tags::loss);
        }

        for (int i = 0; i < static_cast<int>(c.buses.size()); ++i)
        {
            const auto& bus = c.buses[static_cast<std::size_t>(i)];
            le(row().add(ix.v(i, k), 1.0), bus.v_max, tags::voltage_bound);
            le(row().add(ix.v(i, k), -1.0), -bus.v_min, tags::voltage_bound);
        }
        for (int b = 0; b < static_cast<int>(c.branches.size()); ++b)
        {
            const auto& br = c.branches[static_cast<std::size_t>(b)];
            le(row().add(ix.l(b, k), 1.0), br.l_max, tags::current_bound);
            le(row().add(ix.l(b, k), -1.0), -br.l_min, tags::current_bound);
        }

        for (int g = 0; g < static_cast<int>(c.generators.size()); ++g)
        {
            const auto& gen = c.generators[static_cast<std::size_t>(g)];
            const int m = c.bus_index(gen.bus);
            const auto& bus = c.buses[static_cast<std::size_t>(m)];
            const int s = c.storage_at[static_cast<std::size_t>(m)];
            const double a = gen.alpha_pf;
            const double pd = bus.p_demand.at(k), qd = bus.q_demand.at(k);

            for (const auto& r : generator_bound_rows(ix, g, k, gen.f_max.at(k)))
                P.add_ineq(r.h, r.zeta, tags::gen_bound);

            le(row().add(ix.pg(g, k), 1.0), gen.s_max.at(k) * std::cos(a), tags::gen_apparent);

            // -p_m <= a q_m <= p_m on the nodal net powers
            auto lo = row();
            lo.add(ix.pg(g, k), -1.0).add(ix.qg(g, k), -a);
            if (s >= 0) lo.add(ix.ps(s, k), -1.0);
            le(lo, -pd - a * qd, tags::gen_power_factor);
            auto hi = row();
            hi.add(ix.pg(g, k), -1.0).add(ix.qg(g, k), a);
            if (s >= 0) hi.add(ix.ps(s, k), -1.0);
            le(hi, -pd + a * qd, tags::gen_power_factor);
        }

        for (int s = 0; s < static_cast<int>(c.storages.size()); ++s)
        {
            const auto& st = c.storages[static_cast<std::size_t>(s)];
            le(row().add(ix.ps(s, k), 1.0), st.p_max, tags::storage_power);
            le(row().add(ix.ps(s, k), -1.0), -st.p_min, tags::storage_power);
            eq(row().add(ix.e(s, k + 1), 1.0).add(ix.e(s, k), -1.0).add(ix.ps(s, k), c.dt), 0.0,
                tags::storage_dynamics);
        }
    }

    for (int s = 0; s < static_cast<int>(c.storages.size()); ++s)
    {
        const auto& st = c.storages[static_cast<std::size_t>(s)];
        eq(row().add(ix.e(s, 1), 1.0), st.e0, tags::storage_initial);
        for (int k = 1; k <= N + 1; ++k)
        {
            le(row().add(ix.e(s, k), 1.0), st.e_max, tags::storage_energy);
            le(row().add(ix.e(s, k), -1.0), -st.e_min, tags::storage_energy);
        }
    }

    // a-priori box from the data alone: subtree totals bound every flow
    Bounds& B = fs.apriori;
    B.lower = Vector::Zero(n);
    B.upper = Vector::Zero(n);
    for (int k = 1; k <= N; ++k)
    {
        std::vector<double> pabs(c.buses.size(), 0.0), qabs(c.buses.size(), 0.0);
        for (std::size_t i = 0; i < c.buses.size(); ++i)
        {
            pabs[i] = std::abs(c.buses[i].p_demand.at(k));
            qabs[i] = std::abs(c.buses[i].q_demand.at(k));
            if (c.gen_at[i] >= 0)
            {
                const auto& gen = c.generators[static_cast<std::size_t>(c.gen_at[i])];
                const double f = gen.f_max.at(k);
                pabs[i] += f;
                // |a q_m| <= p_m bounds q_m by the largest nodal surplus
                double pm = f + std::abs(c.buses[i].p_demand.at(k));
                if (c.storage_at[i] >= 0)
                    pm += c.storages[static_cast<std::size_t>(c.storage_at[i])].p_max;
                qabs[i] += pm / gen.alpha_pf;
                const int g = c.gen_at[i];
                B.lower[ix.pg(g, k)] = 0.0;
                B.upper[ix.pg(g, k)] = f;
                const double qmax = std::abs(c.buses[i].q_demand.at(k)) + pm / gen.alpha_pf;
                B.lower[ix.qg(g, k)] = -qmax;
                B.upper[ix.qg(g, k)] = qmax;
            }
            if (c.storage_at[i] >= 0)
            {
                const int s = c.storage_at[i];
                const auto& st = c.storages[static_cast<std::size_t>(s)];
                pabs[i] += std::max(-st.p_min, st.p_max);
                B.lower[ix.ps(s, k)] = st.p_min;
                B.upper[ix.ps(s, k)] = st.p_max;
            }
        }
        for (auto it = c.order.rbegin(); it != c.order.rend(); ++it)
        {
            const int u = *it;
            const int pb = c.parent_branch[static_cast<std::size_t>(u)];
            if (pb < 0)
                continue;
            const auto& br = c.branches[static_cast<std::size_t>(pb)];
            double pp = pabs[static_cast<std::size_t>(u)] + br.r * br.l_max;
            double qq = qabs[static_cast<std::size_t>(u)] + br.x * br.l_max;
            for (int cb : c.child_branches[static_cast<std::size_t>(u)])
            {
                pp += B.upper[ix.p(cb, k)];
                qq += B.upper[ix.q(cb, k)];
            }
            B.lower[ix.p(pb, k)] = -pp;
            B.upper[ix.p(pb, k)] = pp;
            B.lower[ix.q(pb, k)] = -qq;
            B.upper[ix.q(pb, k)] = qq;
            B.lower[ix.l(pb, k)] = br.l_min;
            B.upper[ix.l(pb, k)] = br.l_max;
        }
        for (std::size_t i = 0; i < c.buses.size(); ++i)
        {
            B.lower[ix.v(static_cast<int>(i), k)] = c.buses[i].v_min;
            B.upper[ix.v(static_cast<int>(i), k)] = c.buses[i].v_max;
        }
    }
    for (int s = 0; s < static_cast<int>(c.storages.size()); ++s)
    {
        const auto& st = c.storages[static_cast<std::size_t>(s)];
        for (int k = 1; k <= N + 1; ++k)
        {
            B.lower[ix.e(s, k)] = st.e_min;
            B.upper[ix.e(s, k)] = st.e_max;
        }
    }
    return fs;
}

inline FeasibleSet build_feasible_set(const GridCase& c, int N, LossMode mode, const OperatingPoint& op)
{
    return build_feasible_set(c, N, mode, &op);
}

// ---- coupling selection ----

/// Names of the coupling-branch (p, q) pair at step k.
inline std::vector<std::string> root_pq_names(const GridCase& c, int k)
{
    if (c.coupling_branch < 0)
        throw SchemaError("case: the root bus must have exactly one branch to define the coupling branch.");
    const std::string lbl = c.branch_label(c.coupling_branch);
    const std::string ks = "(" + std::to_string(k) + ")";
    return {"p_" + lbl + ks, "q_" + lbl + ks};
}

/// 0/1 selection matrix, one row per requested name in the given order.
inline RowMatrix coupling_projection_matrix(const VariableIndex& ix, const std::vector<std::string>& selection)
{
    if (selection.empty())
        throw DimensionError("coupling_projection_matrix: empty selection.");
    RowMatrix M = RowMatrix::Zero(static_cast<Index>(selection.size()), ix.size());
    for (std::size_t i = 0; i < selection.size(); ++i)
        M(static_cast<Index>(i), ix.at(selection[i])) = 1.0;
    return M;
}

} // namespace flexcz

#endif
