#ifndef FLEXCZ_SERIALIZE_HPP_
#define FLEXCZ_SERIALIZE_HPP_

/**
 * @file serialize.hpp
 * @brief JSON and CSV encodings of sets, reports and FOR results.
 *
 * Doubles are written in the shortest form that parses back to the same
 * bits, so every encoding here round-trips exactly.
 */

#include "aggregate.hpp"
#include "error.hpp"
#include "polytope.hpp"
#include "types.hpp"
#include "zonotope.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace flexcz
{

using Json = nlohmann::json;

inline constexpr const char* cz_schema = "flexcz-cz/1";
inline constexpr const char* polytope_schema = "flexcz-polytope/1";
inline constexpr const char* for_schema = "flexcz-for/1";

namespace detail
{

template<typename Derived>
Json flat_array(const Eigen::DenseBase<Derived>& m)
{
    Json out = Json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            out.push_back(static_cast<double>(m(i, j)));
    return out;
}

inline Json nested_rows(const RowMatrix& M)
{
    Json out = Json::array();
    for (Index i = 0; i < M.rows(); ++i)
        out.push_back(flat_array(M.row(i)));
    return out;
}

inline const Json& field(const Json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(where + ": missing field '" + key + "'.");
    return j.at(key);
}

inline void expect_schema(const Json& j, const char* schema, const std::string& where)
{
    const Json& s = field(j, "schema", where);
    if (!s.is_string() || s.get<std::string>() != schema)
        throw SchemaError(where + ": expected schema '" + std::string(schema) + "'.");
}

inline Index count(const Json& j, const char* key, const std::string& where)
{
    const Json& v = field(j, key, where);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw SchemaError(where + ": '" + key + "' must be a non-negative integer.");
    return static_cast<Index>(v.get<long long>());
}

inline double to_double(const Json& v, const std::string& where)
{
    if (!v.is_number())
        throw SchemaError(where + ": expected a number.");
    return v.get<double>();
}

inline RowMatrix flat_matrix(const Json& j, const char* key, Index rows, Index cols, const std::string& where)
{
    const Json& a = field(j, key, where);
    if (!a.is_array() || static_cast<Index>(a.size()) != rows * cols)
        throw SchemaError(where + ": '" + key + "' must hold " + std::to_string(rows * cols) + " numbers.");
    RowMatrix M(rows, cols);
    for (Index k = 0; k < rows * cols; ++k)
        M.data()[k] = to_double(a[static_cast<std::size_t>(k)], where + "." + key);
    return M;
}

inline Vector vector_field(const Json& j, const char* key, Index len, const std::string& where)
{
    const RowMatrix M = flat_matrix(j, key, len, 1, where);
    return Eigen::Map<const Vector>(M.data(), len);
}

// rows of equal length; an absent field is an empty block
inline RowMatrix nested_matrix(const Json& j, const char* key, Index cols, const std::string& where)
{
    if (!j.contains(key))
        return RowMatrix(0, cols);
    const Json& a = j.at(key);
    if (!a.is_array())
        throw SchemaError(where + ": '" + key + "' must be an array of rows.");
    RowMatrix M(static_cast<Index>(a.size()), cols);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (!a[i].is_array() || static_cast<Index>(a[i].size()) != cols)
            throw SchemaError(where + ": row " + std::to_string(i) + " of '" + key + "' must hold "
                + std::to_string(cols) + " numbers.");
        for (Index k = 0; k < cols; ++k)
            M(static_cast<Index>(i), k) = to_double(a[i][static_cast<std::size_t>(k)], where + "." + key);
    }
    return M;
}

inline std::vector<std::string> string_list(const Json& j, const char* key, const std::string& where)
{
    std::vector<std::string> out;
    if (!j.contains(key))
        return out;
    const Json& a = j.at(key);
    if (!a.is_array())
        throw SchemaError(where + ": '" + key + "' must be an array of strings.");
    for (const auto& s : a)
    {
        if (!s.is_string())
            throw SchemaError(where + ": '" + key + "' must be an array of strings.");
        out.push_back(s.get<std::string>());
    }
    return out;
}

inline Json parse_text(const std::string& text, const std::string& where)
{
    try
    {
        return Json::parse(text);
    }
    catch (const Json::parse_error& e)
    {
        throw SchemaError(where + ": invalid JSON (" + e.what() + ").");
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("cannot open '" + path + "'.");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw SchemaError("cannot write '" + path + "'.");
    out << text;
}

} // namespace detail

// ---- constrained zonotopes ----

inline Json to_json(const ConstrainedZonotope& cz)
{
    return Json{{"schema", cz_schema}, {"dim", cz.dim()}, {"n_g", cz.num_generators()},
        {"m", cz.num_constraints()}, {"c", detail::flat_array(cz.center())},
        {"G", detail::flat_array(cz.generators())}, {"A", detail::flat_array(cz.constraint_matrix())},
        {"b", detail::flat_array(cz.constraint_vector())}};
}

inline ConstrainedZonotope cz_from_json(const Json& j)
{
    const std::string where = "constrained zonotope";
    detail::expect_schema(j, cz_schema, where);
    const Index n = detail::count(j, "dim", where);
    const Index ng = detail::count(j, "n_g", where);
    const Index m = j.contains("m") ? detail::count(j, "m", where)
                                    : static_cast<Index>(detail::field(j, "b", where).size());
    Vector c = detail::vector_field(j, "c", n, where);
    RowMatrix G = detail::flat_matrix(j, "G", n, ng, where);
    RowMatrix A = detail::flat_matrix(j, "A", m, ng, where);
    Vector b = detail::vector_field(j, "b", m, where);
    return ConstrainedZonotope(std::move(c), std::move(G), std::move(A), std::move(b));
}

/// Compact single-line text; equal sets with equal storage give equal bytes.
inline std::string dump_cz(const ConstrainedZonotope& cz)
{
    return to_json(cz).dump();
}

inline ConstrainedZonotope parse_cz(const std::string& text)
{
    return cz_from_json(detail::parse_text(text, "constrained zonotope"));
}

inline void save_cz(const ConstrainedZonotope& cz, const std::string& path)
{
    detail::write_file(path, dump_cz(cz) + "\n");
}

inline ConstrainedZonotope load_cz(const std::string& path)
{
    return parse_cz(detail::read_file(path));
}

// ---- polytopes ----

inline Json to_json(const HPolytope& P)
{
    Json j{{"schema", polytope_schema}, {"dim", P.dim()}, {"A_ineq", detail::nested_rows(P.A_ineq)},
        {"b_ineq", detail::flat_array(P.b_ineq)}, {"A_eq", detail::nested_rows(P.A_eq)},
        {"b_eq", detail::flat_array(P.b_eq)}};
    if (!P.ineq_tags.empty())
        j["ineq_tags"] = P.ineq_tags;
    if (!P.eq_tags.empty())
        j["eq_tags"] = P.eq_tags;
    return j;
}

inline HPolytope polytope_from_json(const Json& j)
{
    const std::string where = "polytope";
    detail::expect_schema(j, polytope_schema, where);
    const Index n = detail::count(j, "dim", where);
    if (n == 0)
        throw SchemaError(where + ": 'dim' must be positive.");
    RowMatrix Ai = detail::nested_matrix(j, "A_ineq", n, where);
    RowMatrix Ae = detail::nested_matrix(j, "A_eq", n, where);
    Vector bi = Ai.rows() > 0 || j.contains("b_ineq") ? detail::vector_field(j, "b_ineq", Ai.rows(), where) : Vector();
    Vector be = Ae.rows() > 0 || j.contains("b_eq") ? detail::vector_field(j, "b_eq", Ae.rows(), where) : Vector();
    if (!Ai.allFinite() || !Ae.allFinite() || !bi.allFinite() || !be.allFinite())
        throw SchemaError(where + ": entries must be finite.");
    HPolytope P(std::move(Ai), std::move(bi), std::move(Ae), std::move(be));
    P.ineq_tags = detail::string_list(j, "ineq_tags", where);
    P.eq_tags = detail::string_list(j, "eq_tags", where);
    try
    {
        P.validate();
    }
    catch (const DimensionError& e)
    {
        throw SchemaError(where + ": " + e.what());
    }
    return P;
}

inline HPolytope load_polytope(const std::string& path)
{
    return polytope_from_json(detail::parse_text(detail::read_file(path), "polytope"));
}

// ---- reports and FOR output ----

inline Json to_json(const ConversionReport& r)
{
    return Json{{"bounds_mode", r.bounds_mode}, {"bounds_seconds", r.bounds_seconds},
        {"offline_seconds", r.offline_seconds}, {"online_seconds", r.online_seconds},
        {"projection_seconds", r.projection_seconds},
        {"total_seconds", r.offline_seconds + r.online_seconds + r.projection_seconds}, {"n", r.n},
        {"n_g", r.n_g}, {"m", r.m}, {"rows_static", r.rows_static}, {"rows_dynamic", r.rows_dynamic},
        {"rows_skipped", r.rows_skipped}, {"threads", r.threads}};
}

/// FOR document. The hull is only available for 2-D selections; otherwise
/// vertices and support are empty and the set itself carries the result.
inline Json for_to_json(const std::vector<std::string>& selection, const ConstrainedZonotope& projected,
    const Hull2D* hull, const ConversionReport& report)
{
    Json vertices = Json::array();
    Json support = Json::array();
    if (hull)
    {
        for (const auto& v : hull->vertices)
            vertices.push_back(Json::array({v.x(), v.y()}));
        for (std::size_t k = 0; k < hull->angles.size(); ++k)
            support.push_back(Json{{"angle", hull->angles[k]}, {"value", hull->support[k]}});
    }
    return Json{{"schema", for_schema}, {"selection", selection}, {"dimension", projected.dim()},
        {"vertices", vertices}, {"support", support}, {"report", to_json(report)}, {"cz", to_json(projected)}};
}

/// One vertex per row, header "x,y".
inline std::string hull_to_csv(const std::vector<std::string>& selection, const Hull2D& hull)
{
    std::string out;
    if (selection.size() == 2)
        out = selection[0] + "," + selection[1] + "\n";
    else
        out = "x,y\n";
    char buf[64];
    for (const auto& v : hull.vertices)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", v.x(), v.y());
        out += buf;
    }
    return out;
}

} // namespace flexcz

#endif
