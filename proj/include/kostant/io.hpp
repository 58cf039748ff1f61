#ifndef KOSTANT_IO_HPP
#define KOSTANT_IO_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <kostant/error.hpp>
#include <kostant/hyperbolic2d.hpp>
#include <kostant/jets.hpp>
#include <kostant/kostant_nd.hpp>
#include <kostant/normal_forms.hpp>
#include <kostant/scalar.hpp>
#include <kostant/separable.hpp>
#include <kostant/series.hpp>
#include <kostant/verify.hpp>

namespace kostant::io
{

using json = nlohmann::json;
// Documents are read into exact Gaussian rationals; JSON numbers are binary
// doubles, so the conversion loses nothing.
using q = gaussian_rational;

inline constexpr const char *schema_version = "kostant-lab/1";
inline constexpr const char *tool_version = "0.1.0";

enum class mode { formal, exact };

inline std::string to_string(mode m)
{
    return m == mode::formal ? "formal" : "exact";
}

// ---------------------------------------------------------------- reading

namespace detail
{

[[noreturn]] inline void schema_fail(const std::string &path, const std::string &msg)
{
    throw error(error_code::schema_error, path + ": " + msg);
}

inline void check_keys(const json &o, const std::string &path, std::initializer_list<const char *> allowed,
                       std::initializer_list<const char *> required = {})
{
    if (!o.is_object()) {
        schema_fail(path, "expected an object");
    }
    for (const auto &[k, v] : o.items()) {
        bool ok = false;
        for (const char *a : allowed) {
            ok = ok || k == a;
        }
        if (!ok) {
            schema_fail(path, "unknown field '" + k + "'");
        }
    }
    for (const char *r : required) {
        if (!o.contains(r)) {
            schema_fail(path, std::string("missing field '") + r + "'");
        }
    }
}

inline std::string child(const std::string &path, const std::string &key)
{
    return path.empty() ? key : path + "." + key;
}

inline std::string child(const std::string &path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

inline int get_int(const json &v, const std::string &path)
{
    if (!v.is_number_integer()) {
        schema_fail(path, "expected an integer");
    }
    return v.get<int>();
}

inline double get_double(const json &v, const std::string &path)
{
    if (!v.is_number()) {
        schema_fail(path, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        schema_fail(path, "expected a finite number");
    }
    return d;
}

inline const json &get_array(const json &v, const std::string &path)
{
    if (!v.is_array()) {
        schema_fail(path, "expected an array");
    }
    return v;
}

inline std::vector<int> get_int_list(const json &v, const std::string &path)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < get_array(v, path).size(); ++i) {
        out.push_back(get_int(v[i], child(path, i)));
    }
    return out;
}

inline mpq_class parse_rational(const json &v, const std::string &path)
{
    if (!v.is_string()) {
        schema_fail(path, "expected a rational string");
    }
    try {
        mpq_class r(v.get<std::string>(), 10);
        r.canonicalize();
        return r;
    } catch (const std::invalid_argument &) {
        schema_fail(path, "malformed rational");
    }
}

// Coefficient fields {re, im[, q: ["a/b", "c/d"]]} of a record; q, when
// present, is authoritative.
inline q get_scalar(const json &o, const std::string &path)
{
    if (o.contains("q")) {
        const auto &qq = get_array(o.at("q"), child(path, "q"));
        if (qq.size() != 2) {
            schema_fail(child(path, "q"), "expected [re, im]");
        }
        return {parse_rational(qq[0], child(child(path, "q"), 0)), parse_rational(qq[1], child(child(path, "q"), 1))};
    }
    const double re = o.contains("re") ? get_double(o.at("re"), child(path, "re")) : 0.0;
    const double im = o.contains("im") ? get_double(o.at("im"), child(path, "im")) : 0.0;
    return {mpq_class(re), mpq_class(im)};
}

inline std::string rational_string(const mpq_class &r)
{
    return r.get_str(10);
}

inline void put_scalar(json &o, const q &c)
{
    const double re = c.real().get_d();
    const double im = c.imag().get_d();
    o["re"] = re;
    o["im"] = im;
    if (mpq_class(re) != c.real() || mpq_class(im) != c.imag()) {
        o["q"] = json::array({rational_string(c.real()), rational_string(c.imag())});
    }
}

} // namespace detail

struct function_literal {
    int arity = 1;
    // present for series literals (formal data)
    std::optional<int> order;
    separable_function<q> fn{1};
    // flat sources whose homotopy integrals are added pointwise (arity 1)
    std::vector<separable_function<q>> homotopy;

    [[nodiscard]] bool has_homotopy() const
    {
        return !homotopy.empty();
    }

    [[nodiscard]] truncated_series<q> series(int fallback_order) const
    {
        return fn.taylor(order.value_or(fallback_order));
    }

    [[nodiscard]] evaluable evaluator() const
    {
        if (!has_homotopy()) {
            return [f = fn](std::span<const double> p) { return f.evaluate(p); };
        }
        return [s = smooth_function_2d<q>(fn, homotopy)](std::span<const double> p) { return s.evaluate(p); };
    }
};

namespace detail
{

inline flat_factor<q> parse_flat(const json &o, const std::string &path)
{
    check_keys(o, path, {"c", "pre"}, {"c"});
    flat_factor<q> f;
    f.c = get_double(o.at("c"), child(path, "c"));
    if (!(f.c > 0.0)) {
        schema_fail(child(path, "c"), "must be positive");
    }
    if (o.contains("pre")) {
        const auto &pre = get_array(o.at("pre"), child(path, "pre"));
        for (std::size_t i = 0; i < pre.size(); ++i) {
            const auto p = child(child(path, "pre"), i);
            check_keys(pre[i], p, {"re", "im", "q"});
            f.pre.push_back(get_scalar(pre[i], p));
        }
    } else {
        f.pre.push_back(q(1));
    }
    return f;
}

inline factor_tag parse_tag(const json &o, const std::string &path)
{
    check_keys(o, path, {"kind", "pair", "c", "quadrant"}, {"kind", "pair", "c"});
    if (!o.at("kind").is_string()) {
        schema_fail(child(path, "kind"), "expected a string");
    }
    const auto kind = o.at("kind").get<std::string>();
    const int pair = get_int(o.at("pair"), child(path, "pair"));
    const double c = get_double(o.at("c"), child(path, "c"));
    if (kind == "flat") {
        if (o.contains("quadrant")) {
            schema_fail(child(path, "quadrant"), "only kernel tags carry a quadrant");
        }
        return factor_tag::flat(pair, c);
    }
    if (kind == "kernel") {
        if (!o.contains("quadrant")) {
            schema_fail(path, "missing field 'quadrant'");
        }
        return factor_tag::kernel(pair, get_int(o.at("quadrant"), child(path, "quadrant")), c);
    }
    schema_fail(child(path, "kind"), "expected 'flat' or 'kernel'");
}

inline void parse_rational_term(const json &o, const std::string &path, separable_function<q> &out)
{
    check_keys(o, path, {"offsets", "numerator", "denominators", "tag"}, {"offsets", "numerator"});
    const int n = out.arity();
    term_key key = out.plain_key();
    key.offsets = get_int_list(o.at("offsets"), child(path, "offsets"));
    if (key.offsets.size() != static_cast<std::size_t>(n)) {
        schema_fail(child(path, "offsets"), "expected one offset per pair");
    }
    if (o.contains("denominators")) {
        const auto dp = child(path, "denominators");
        const auto &ds = get_array(o.at("denominators"), dp);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto p = child(dp, i);
            check_keys(ds[i], p, {"pair", "m", "power"}, {"pair", "m", "power"});
            const int pair = get_int(ds[i].at("pair"), child(p, "pair"));
            const int m = get_int(ds[i].at("m"), child(p, "m"));
            const int pw = get_int(ds[i].at("power"), child(p, "power"));
            if (pair < 1 || pair > n || m == 0 || pw < 1) {
                schema_fail(p, "denominator needs pair in 1..n, m != 0, power >= 1");
            }
            key.denominators[{pair, m}] += pw;
        }
    }
    if (o.contains("tag")) {
        key.tag = parse_tag(o.at("tag"), child(path, "tag"));
    }
    h_poly<q> num(n);
    const auto np = child(path, "numerator");
    const auto &ns = get_array(o.at("numerator"), np);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const auto p = child(np, i);
        check_keys(ns[i], p, {"h", "re", "im", "q"}, {"h"});
        const auto e = get_int_list(ns[i].at("h"), child(p, "h"));
        if (e.size() != static_cast<std::size_t>(n)) {
            schema_fail(child(p, "h"), "expected one exponent per pair");
        }
        num.add_to(e, get_scalar(ns[i], p));
    }
    out.add_term(key, num);
}

} // namespace detail

// Function literal: an object with any of the record groups
//   "poly":            [{exponents: [k1, l1, ...], re, im}]
//   "rational_term":   [{offsets, numerator: [{h, re, im}], denominators: [{pair, m, power}], tag?}]
//   "gauss_flat":      [{pair, c, pre: [{re, im}]}]
//   "quadrant_kernel": {pair, a: [4 x ({c, pre} | null)]}
//   "homotopy":        [function literal with flat records only]   (arity 1)
// plus "arity" (defaults to the caller's) and "order" (series literal: poly only).
inline function_literal parse_function(const json &o, const std::string &path, int arity)
{
    using namespace detail;
    check_keys(o, path, {"arity", "order", "poly", "rational_term", "gauss_flat", "quadrant_kernel", "homotopy"});
    function_literal f;
    f.arity = o.contains("arity") ? get_int(o.at("arity"), child(path, "arity")) : arity;
    if (f.arity != arity) {
        schema_fail(child(path, "arity"), "does not match the model arity " + std::to_string(arity));
    }
    f.fn = separable_function<q>(arity);
    if (o.contains("order")) {
        f.order = get_int(o.at("order"), child(path, "order"));
        if (*f.order < 0) {
            schema_fail(child(path, "order"), "must be nonnegative");
        }
        for (const char *k : {"rational_term", "gauss_flat", "quadrant_kernel", "homotopy"}) {
            if (o.contains(k)) {
                schema_fail(child(path, k), "series literals carry poly records only");
            }
        }
    }
    try {
        if (o.contains("poly")) {
            const auto pp = child(path, "poly");
            const auto &ps = get_array(o.at("poly"), pp);
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto p = child(pp, i);
                check_keys(ps[i], p, {"exponents", "re", "im", "q"}, {"exponents"});
                const auto e = get_int_list(ps[i].at("exponents"), child(p, "exponents"));
                if (e.size() != 2 * static_cast<std::size_t>(arity)) {
                    schema_fail(child(p, "exponents"), "expected 2*arity exponents");
                }
                for (int k : e) {
                    if (k < 0) {
                        schema_fail(child(p, "exponents"), "exponents must be nonnegative");
                    }
                }
                if (f.order && total_degree(e) > *f.order) {
                    schema_fail(child(p, "exponents"), "monomial degree exceeds the series order");
                }
                f.fn.add_monomial(e, get_scalar(ps[i], p));
            }
        }
        if (o.contains("rational_term")) {
            const auto rp = child(path, "rational_term");
            const auto &rs = get_array(o.at("rational_term"), rp);
            for (std::size_t i = 0; i < rs.size(); ++i) {
                parse_rational_term(rs[i], child(rp, i), f.fn);
            }
        }
        if (o.contains("gauss_flat")) {
            const auto gp = child(path, "gauss_flat");
            const auto &gs = get_array(o.at("gauss_flat"), gp);
            for (std::size_t i = 0; i < gs.size(); ++i) {
                const auto p = child(gp, i);
                check_keys(gs[i], p, {"pair", "c", "pre"}, {"pair", "c"});
                const int pair = get_int(gs[i].at("pair"), child(p, "pair"));
                json rest = gs[i];
                rest.erase("pair");
                f.fn = f.fn + parse_flat(rest, p).as_function(arity, pair);
            }
        }
        if (o.contains("quadrant_kernel")) {
            const auto kp = child(path, "quadrant_kernel");
            const auto &k = o.at("quadrant_kernel");
            check_keys(k, kp, {"pair", "a"}, {"a"});
            const int pair = k.contains("pair") ? get_int(k.at("pair"), child(kp, "pair")) : 1;
            const auto &a = get_array(k.at("a"), child(kp, "a"));
            if (a.size() != 4) {
                schema_fail(child(kp, "a"), "expected four quadrant entries");
            }
            for (std::size_t qd = 0; qd < 4; ++qd) {
                if (!a[qd].is_null()) {
                    f.fn = f.fn
                           + parse_flat(a[qd], child(child(kp, "a"), qd))
                                 .as_function(arity, pair, static_cast<int>(qd) + 1);
                }
            }
        }
        if (o.contains("homotopy")) {
            const auto hp = child(path, "homotopy");
            if (arity != 1) {
                schema_fail(hp, "homotopy sources are two-dimensional");
            }
            const auto &hs = get_array(o.at("homotopy"), hp);
            for (std::size_t i = 0; i < hs.size(); ++i) {
                auto src = parse_function(hs[i], child(hp, i), 1);
                if (src.has_homotopy()) {
                    schema_fail(child(hp, i), "nested homotopy sources");
                }
                for (const auto &[key, num] : src.fn.terms()) {
                    if (key.tag.type != factor_tag::kind::flat) {
                        schema_fail(child(hp, i), "homotopy sources must be flat-tagged");
                    }
                }
                f.homotopy.push_back(std::move(src.fn));
            }
        }
        f.fn.normalize();
    } catch (const error &e) {
        if (e.code() == error_code::schema_error) {
            throw;
        }
        detail::schema_fail(path, e.what());
    }
    return f;
}

struct form_literal {
    int degree = 0;
    int arity = 1;
    std::optional<mode> declared_mode;
    std::vector<std::pair<index_tuple, function_literal>> coeffs;
};

namespace detail
{

inline mode parse_mode(const json &v, const std::string &path)
{
    if (v.is_string() && v.get<std::string>() == "formal") {
        return mode::formal;
    }
    if (v.is_string() && v.get<std::string>() == "exact") {
        return mode::exact;
    }
    schema_fail(path, "expected 'formal' or 'exact'");
}

} // namespace detail

// {"degree": k, "arity": n, "mode": ..., "coeffs": [{"tuple": [i1, ..., ik], "fn": function literal}]}
inline form_literal parse_form(const json &o, const std::string &path, int arity)
{
    using namespace detail;
    check_keys(o, path, {"degree", "arity", "mode", "coeffs"}, {"degree", "coeffs"});
    form_literal f;
    f.degree = get_int(o.at("degree"), child(path, "degree"));
    f.arity = o.contains("arity") ? get_int(o.at("arity"), child(path, "arity")) : arity;
    if (f.arity != arity) {
        schema_fail(child(path, "arity"), "does not match the model arity " + std::to_string(arity));
    }
    if (f.degree < 0 || f.degree > arity) {
        schema_fail(child(path, "degree"), "must lie in 0..n");
    }
    if (o.contains("mode")) {
        f.declared_mode = parse_mode(o.at("mode"), child(path, "mode"));
    }
    const auto cp = child(path, "coeffs");
    const auto &cs = get_array(o.at("coeffs"), cp);
    std::set<index_tuple> seen;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto p = child(cp, i);
        check_keys(cs[i], p, {"tuple", "fn"}, {"tuple", "fn"});
        auto t = get_int_list(cs[i].at("tuple"), child(p, "tuple"));
        if (static_cast<int>(t.size()) != f.degree) {
            schema_fail(child(p, "tuple"), "length differs from the form degree");
        }
        for (std::size_t r = 0; r < t.size(); ++r) {
            if (t[r] < 1 || t[r] > arity || (r > 0 && t[r] <= t[r - 1])) {
                schema_fail(child(p, "tuple"), "must be strictly increasing in 1..n");
            }
        }
        if (!seen.insert(t).second) {
            schema_fail(child(p, "tuple"), "duplicate tuple");
        }
        auto fn = parse_function(cs[i].at("fn"), child(p, "fn"), arity);
        if (fn.has_homotopy()) {
            schema_fail(child(p, "fn"), "form coefficients cannot carry homotopy sources");
        }
        f.coeffs.emplace_back(std::move(t), std::move(fn));
    }
    return f;
}

// {"box": [[lo, hi], ...], "points": N, "exclude_abs_h_below": delta, "pair": j}
inline grid_spec parse_grid(const json &o, const std::string &path, int arity)
{
    using namespace detail;
    check_keys(o, path, {"box", "points", "exclude_abs_h_below", "pair"});
    grid_spec g = grid_spec::standard(arity);
    g.points_per_axis = arity == 1 ? 41 : (arity == 2 ? 11 : 5);
    if (o.contains("box")) {
        g.box.clear();
        const auto bp = child(path, "box");
        const auto &b = get_array(o.at("box"), bp);
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto &iv = get_array(b[i], child(bp, i));
            if (iv.size() != 2) {
                schema_fail(child(bp, i), "expected [lo, hi]");
            }
            g.box.emplace_back(get_double(iv[0], child(child(bp, i), 0)), get_double(iv[1], child(child(bp, i), 1)));
        }
    }
    if (o.contains("points")) {
        g.points_per_axis = get_int(o.at("points"), child(path, "points"));
    }
    if (o.contains("exclude_abs_h_below")) {
        if (o.at("exclude_abs_h_below").is_null()) {
            g.exclude_abs_h_below.reset();
        } else {
            g.exclude_abs_h_below = get_double(o.at("exclude_abs_h_below"), child(path, "exclude_abs_h_below"));
        }
    }
    if (o.contains("pair")) {
        g.active_pair = get_int(o.at("pair"), child(path, "pair"));
    }
    if (g.box.size() != 2 * static_cast<std::size_t>(arity)) {
        schema_fail(child(path, "box"), "expected 2*arity intervals");
    }
    try {
        g.validate();
    } catch (const error &e) {
        schema_fail(path, e.what());
    }
    return g;
}

inline json grid_to_json(const grid_spec &g)
{
    json box = json::array();
    for (const auto &[lo, hi] : g.box) {
        box.push_back(json::array({lo, hi}));
    }
    json o{{"box", box}, {"points", g.points_per_axis}, {"pair", g.active_pair}};
    o["exclude_abs_h_below"] = g.exclude_abs_h_below ? json(*g.exclude_abs_h_below) : json(nullptr);
    return o;
}

struct options {
    int order = 12;
    std::optional<mode> run_mode;
    std::optional<double> tolerance;
    std::optional<grid_spec> grid;
    derivative_probe probe;
};

struct problem {
    std::string kind;
    williamson_spec model;
    options opts;
    // kind-specific payload
    std::optional<function_literal> function;
    std::optional<function_literal> source;
    std::optional<form_literal> form;
    int pair = 1;
    // canonical serialisation, digested into the report
    json document;
};

inline const std::vector<std::string> &problem_kinds()
{
    static const std::vector<std::string> k{"solve2d", "solve_h1",  "solve_top", "solve_h2_dim6",
                                            "flat_section", "verify", "expand_jets"};
    return k;
}

// Parses and validates a problem document (already decoded JSON).
inline problem parse_problem_json(const json &doc)
{
    using namespace detail;
    check_keys(doc, "", {"kind", "model", "data", "options"}, {"kind", "model", "data"});
    problem p;
    p.document = doc;
    if (!doc.at("kind").is_string()) {
        schema_fail("kind", "expected a string");
    }
    p.kind = doc.at("kind").get<std::string>();
    if (std::find(problem_kinds().begin(), problem_kinds().end(), p.kind) == problem_kinds().end()) {
        schema_fail("kind", "unknown problem kind '" + p.kind + "'");
    }

    const auto &m = doc.at("model");
    check_keys(m, "model", {"ke", "kh", "kf"}, {"ke", "kh", "kf"});
    p.model = {get_int(m.at("ke"), "model.ke"), get_int(m.at("kh"), "model.kh"), get_int(m.at("kf"), "model.kf")};
    try {
        (void)build_model(p.model);
    } catch (const error &e) {
        throw error(error_code::model_error, std::string("model: ") + e.what());
    }
    if (p.model.ke != 0 || p.model.kf != 0 || p.model.kh < 1) {
        throw error(error_code::model_error, "model: solvers require Williamson type (0, n, 0) with n >= 1");
    }
    const int n = p.model.arity();
    const bool planar = p.kind == "solve2d" || p.kind == "flat_section" || p.kind == "expand_jets";
    if (planar && n != 1) {
        throw error(error_code::model_error, "model: kind '" + p.kind + "' is two-dimensional (kh = 1)");
    }
    if (p.kind == "solve_h2_dim6" && n != 3) {
        throw error(error_code::model_error, "model: solve_h2_dim6 needs kh = 3");
    }

    if (doc.contains("options")) {
        const auto &o = doc.at("options");
        check_keys(o, "options", {"order", "mode", "tolerance", "grid", "probe"});
        if (o.contains("order")) {
            p.opts.order = get_int(o.at("order"), "options.order");
            if (p.opts.order < 2 || p.opts.order > 64) {
                schema_fail("options.order", "must lie in 2..64");
            }
        }
        if (o.contains("mode")) {
            p.opts.run_mode = parse_mode(o.at("mode"), "options.mode");
        }
        if (o.contains("tolerance")) {
            p.opts.tolerance = get_double(o.at("tolerance"), "options.tolerance");
            if (!(*p.opts.tolerance > 0.0)) {
                schema_fail("options.tolerance", "must be positive");
            }
        }
        if (o.contains("grid")) {
            p.opts.grid = parse_grid(o.at("grid"), "options.grid", n);
        }
        if (o.contains("probe")) {
            const auto &pr = o.at("probe");
            check_keys(pr, "options.probe", {"step", "order"});
            if (pr.contains("step")) {
                p.opts.probe.step = get_double(pr.at("step"), "options.probe.step");
            }
            if (pr.contains("order")) {
                p.opts.probe.order = get_int(pr.at("order"), "options.probe.order");
            }
            try {
                p.opts.probe.validate();
            } catch (const error &e) {
                schema_fail("options.probe", e.what());
            }
        }
    }

    const auto &d = doc.at("data");
    if (p.kind == "solve2d" || p.kind == "flat_section" || p.kind == "expand_jets") {
        p.function = parse_function(d, "data", n);
        if (p.kind == "flat_section") {
            check_keys(d, "data", {"arity", "quadrant_kernel"}, {"quadrant_kernel"});
        }
        if (p.kind == "expand_jets" && (p.function->has_homotopy() || p.function->fn.has_tags())) {
            schema_fail("data", "jet expansion takes polynomial data");
        }
    } else if (p.kind == "verify") {
        check_keys(d, "data", {"function", "source", "pair"}, {"function"});
        p.function = parse_function(d.at("function"), "data.function", n);
        p.source = d.contains("source") ? parse_function(d.at("source"), "data.source", n) : function_literal{};
        if (!d.contains("source")) {
            p.source->arity = n;
            p.source->fn = separable_function<q>(n);
        }
        if (d.contains("pair")) {
            p.pair = get_int(d.at("pair"), "data.pair");
            if (p.pair < 1 || p.pair > n) {
                schema_fail("data.pair", "outside 1..n");
            }
        }
    } else {
        p.form = parse_form(d, "data", n);
        const int want = p.kind == "solve_h1" ? 1 : (p.kind == "solve_top" ? n : 2);
        if (p.form->degree != want) {
            schema_fail("data.degree", "kind '" + p.kind + "' expects degree " + std::to_string(want));
        }
    }
    return p;
}

inline problem parse_problem_text(const std::string &text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw error(error_code::parse_error, e.what());
    }
    return parse_problem_json(doc);
}

inline problem parse_problem_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(error_code::parse_error, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_text(ss.str());
}

// ---------------------------------------------------------------- writing

inline json series_to_json(const truncated_series<q> &s)
{
    json poly = json::array();
    for (const auto &[m, c] : s.coeffs()) {
        json r{{"exponents", m}};
        detail::put_scalar(r, c);
        poly.push_back(std::move(r));
    }
    return {{"arity", s.arity()}, {"order", s.order()}, {"poly", poly}};
}

inline json separable_to_json(const separable_function<q> &f)
{
    json terms = json::array();
    for (const auto &[k, num] : f.terms()) {
        json t{{"offsets", k.offsets}};
        json ns = json::array();
        for (const auto &[e, c] : num.terms()) {
            json r{{"h", e}};
            detail::put_scalar(r, c);
            ns.push_back(std::move(r));
        }
        t["numerator"] = ns;
        if (!k.denominators.empty()) {
            json ds = json::array();
            for (const auto &[jm, pw] : k.denominators) {
                ds.push_back({{"pair", jm.first}, {"m", jm.second}, {"power", pw}});
            }
            t["denominators"] = ds;
        }
        if (k.tag.type != factor_tag::kind::none) {
            json tag{{"kind", k.tag.type == factor_tag::kind::flat ? "flat" : "kernel"},
                     {"pair", k.tag.pair},
                     {"c", k.tag.c}};
            if (k.tag.type == factor_tag::kind::kernel) {
                tag["quadrant"] = k.tag.quadrant;
            }
            t["tag"] = tag;
        }
        terms.push_back(std::move(t));
    }
    return {{"arity", f.arity()}, {"rational_term", terms}};
}

inline json smooth_to_json(const smooth_function_2d<q> &g)
{
    json o = separable_to_json(g.closed());
    if (!g.homotopy_sources().empty()) {
        json hs = json::array();
        for (const auto &h : g.homotopy_sources()) {
            hs.push_back(separable_to_json(h));
        }
        o["homotopy"] = hs;
    }
    return o;
}

template <coefficient C>
json form_to_json(const polarized_form<C> &f, mode m)
{
    json cs = json::array();
    for (const auto &[t, c] : f.coeffs()) {
        json fn;
        if constexpr (coefficient_traits<C>::formal) {
            fn = series_to_json(c);
        } else {
            fn = separable_to_json(c);
        }
        cs.push_back({{"tuple", t}, {"fn", fn}});
    }
    json o{{"degree", f.degree()}, {"arity", f.arity()}, {"mode", to_string(m)}, {"coeffs", cs}};
    if constexpr (coefficient_traits<C>::formal) {
        o["order"] = f.zero().order();
    }
    return o;
}

inline json residual_to_json(const residual_report &r)
{
    json o{{"label", r.label}, {"exact_zero", r.exact_zero}, {"tolerance", r.tolerance},
           {"within_tolerance", r.within_tolerance()}};
    if (r.symbolic_max) {
        o["symbolic_max"] = *r.symbolic_max;
    }
    if (r.grid_max) {
        o["grid_max"] = *r.grid_max;
        o["grid_mean"] = r.grid_mean.value_or(0.0);
        o["grid_points"] = r.grid_points;
        o["grid"] = r.grid;
    }
    return o;
}

// 64-bit FNV-1a.
inline std::string fnv1a_digest(const std::string &bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---------------------------------------------------------------- running

struct report {
    std::string kind;
    bool ok = true;
    std::optional<std::pair<std::string, std::string>> failure;
    std::optional<json> solution;
    std::vector<residual_report> residuals;
    std::vector<std::pair<std::string, double>> timings;
    std::string input_digest;

    [[nodiscard]] json to_json() const
    {
        json o{{"schema", schema_version}, {"tool_version", tool_version}, {"kind", kind},
               {"status", ok ? "ok" : "error"}, {"input_digest", input_digest}};
        if (failure) {
            o["error"] = {{"code", failure->first}, {"message", failure->second}};
        }
        if (solution) {
            o["solution"] = *solution;
        }
        json rs = json::array();
        for (const auto &r : residuals) {
            rs.push_back(residual_to_json(r));
        }
        o["residuals"] = rs;
        json t = json::object();
        for (const auto &[k, v] : timings) {
            t[k] = v;
        }
        o["timings"] = t;
        return o;
    }
};

inline report error_report(const std::string &kind, const error &e, const std::string &digest = {})
{
    report r;
    r.kind = kind;
    r.ok = false;
    r.failure = std::make_pair(to_string(e.code()), std::string(e.what()));
    r.input_digest = digest;
    return r;
}

namespace detail
{

class phase_timer
{
public:
    explicit phase_timer(report &r) : r_(r), start_(std::chrono::steady_clock::now()) {}
    void lap(const std::string &name)
    {
        const auto now = std::chrono::steady_clock::now();
        r_.timings.emplace_back(name, std::chrono::duration<double, std::milli>(now - start_).count());
        start_ = now;
    }

private:
    report &r_;
    std::chrono::steady_clock::time_point start_;
};

inline mode effective_mode(const problem &p)
{
    if (p.opts.run_mode) {
        return *p.opts.run_mode;
    }
    if (p.form && p.form->declared_mode) {
        return *p.form->declared_mode;
    }
    const bool nd = p.kind == "solve_h1" || p.kind == "solve_top" || p.kind == "solve_h2_dim6";
    return nd || p.kind == "expand_jets" ? mode::formal : mode::exact;
}

inline grid_spec effective_grid(const problem &p, int pair)
{
    if (p.opts.grid) {
        return *p.opts.grid;
    }
    const int n = p.model.arity();
    grid_spec g = grid_spec::standard(n, pair);
    g.points_per_axis = n == 1 ? 41 : (n == 2 ? 11 : 5);
    return g;
}

inline void run_solve2d(const problem &p, report &r, phase_timer &timer)
{
    const auto &f = *p.function;
    if (f.has_homotopy()) {
        schema_fail("data.homotopy", "solve2d data cannot carry homotopy sources");
    }
    if (effective_mode(p) == mode::formal) {
        const auto fs = f.series(p.opts.order);
        const auto g = solve_jets_recursive(fs);
        timer.lap("solve");
        r.solution = series_to_json(g);
        r.residuals.push_back(series_residual("jet equation", cohom_operator(1, g) - fs.truncated(g.order()), 0.0));
        r.residuals.push_back(compare_series(g, solve_jets_closed_form(fs), 1e-12));
        r.residuals.back().label = "recursion vs closed form";
        return;
    }
    const auto g = solve_full_2d(f.fn);
    timer.lap("solve");
    r.solution = smooth_to_json(g);
    const auto [plain, flat] = split_flat(f.fn);
    r.residuals.push_back(symbolic_residual("symbolic residual", g.closed().cohom(1) - plain, 0.0));
    if (!plain.is_zero()) {
        const int order = p.opts.order;
        auto rep = compare_series(g.closed().taylor(order - 2), solve_jets_recursive(plain.taylor(order)), 1e-10);
        rep.label = "taylor vs recursion";
        r.residuals.push_back(rep);
    }
    if (!flat.is_zero()) {
        const auto model = build_model(p.model);
        const evaluable gv = [&g](std::span<const double> x) { return g.evaluate(x); };
        const evaluable fv = [&f](std::span<const double> x) { return f.fn.evaluate(x); };
        r.residuals.push_back(flow_residual(model, 1, gv, fv, effective_grid(p, 1), p.opts.probe,
                                            p.opts.tolerance.value_or(1e-6)));
    }
}

inline void run_flat_section(const problem &p, report &r, phase_timer &timer)
{
    const auto &k = p.function->fn;
    const auto s = smooth_function_2d<q>(k);
    timer.lap("solve");
    r.solution = smooth_to_json(s);
    r.residuals.push_back(symbolic_residual("kernel equation", k.cohom(1), 0.0));
    const auto model = build_model(p.model);
    const evaluable gv = [&k](std::span<const double> x) { return k.evaluate(x); };
    const evaluable zero = [](std::span<const double>) { return complex{}; };
    r.residuals.push_back(
        flow_residual(model, 1, gv, zero, effective_grid(p, 1), p.opts.probe, p.opts.tolerance.value_or(1e-8)));
}

inline void run_verify(const problem &p, report &r, phase_timer &)
{
    const auto &g = *p.function;
    const auto &f = *p.source;
    const auto model = build_model(p.model);
    const double tol = p.opts.tolerance.value_or(1e-8);
    if (!g.has_homotopy() && !f.has_homotopy()) {
        r.residuals.push_back(symbolic_residual("symbolic residual", g.fn.cohom(p.pair) - f.fn, 0.0));
    }
    r.residuals.push_back(
        flow_residual(model, p.pair, g.evaluator(), f.evaluator(), effective_grid(p, p.pair), p.opts.probe, tol));
}

inline void run_expand(const problem &p, report &r, phase_timer &timer)
{
    const auto fs = p.function->series(p.opts.order);
    const auto a = solve_jets_recursive(fs);
    const auto b = solve_jets_closed_form(fs);
    timer.lap("solve");
    std::set<multi_index> support;
    for (const auto &[m, c] : a.coeffs()) {
        support.insert(m);
    }
    for (const auto &[m, c] : b.coeffs()) {
        support.insert(m);
    }
    json rows = json::array();
    for (const auto &m : support) {
        json ra = json::object();
        json rb = json::object();
        put_scalar(ra, a.coeff(m));
        put_scalar(rb, b.coeff(m));
        rows.push_back({{"k", m[0]}, {"l", m[1]}, {"recursion", ra}, {"closed_form", rb}});
    }
    r.solution = json{{"order", a.order()}, {"jets", rows}};
    auto rep = compare_series(a, b, 1e-12);
    rep.label = "recursion vs closed form";
    r.residuals.push_back(rep);
}

template <coefficient C>
polarized_form<C> build_form(const form_literal &lit, const C &prototype, auto &&convert)
{
    polarized_form<C> f(lit.degree, lit.arity, prototype);
    for (const auto &[t, fn] : lit.coeffs) {
        f.set(t, convert(fn));
    }
    return f;
}

template <coefficient C>
void run_nd_with(const problem &p, report &r, phase_timer &timer, const polarized_form<C> &alpha, mode m)
{
    const double tol = 0.0;
    if (p.kind != "solve_top") {
        r.residuals.push_back(check_closed(alpha, tol));
        if (!r.residuals.back().within_tolerance()) {
            throw error(error_code::not_closed, "input form is not d^nabla-closed");
        }
    }
    if (p.kind == "solve_h1") {
        auto res = solve_h1(alpha, {tol});
        timer.lap("solve");
        polarized_form<C> g(0, alpha.arity(), res.solution);
        g.set({}, res.solution);
        r.solution = form_to_json(g, m);
        r.residuals.insert(r.residuals.end(), res.transport.begin(), res.transport.end());
        r.residuals.push_back(res.residual);
        return;
    }
    auto res = p.kind == "solve_top" ? solve_top(alpha, {tol}) : solve_h2_dim6(alpha, {tol});
    timer.lap("solve");
    r.solution = form_to_json(res.solution, m);
    r.residuals.insert(r.residuals.end(), res.transport.begin(), res.transport.end());
    r.residuals.push_back(res.residual);
}

inline void run_nd(const problem &p, report &r, phase_timer &timer)
{
    const auto &lit = *p.form;
    const int n = lit.arity;
    const mode m = effective_mode(p);
    if (m == mode::formal) {
        int order = p.opts.order;
        for (const auto &[t, fn] : lit.coeffs) {
            if (fn.order) {
                order = std::min(order, *fn.order);
            }
        }
        const truncated_series<q> proto(n, order);
        auto alpha = build_form(lit, proto, [&](const function_literal &fn) { return fn.fn.taylor(order); });
        run_nd_with(p, r, timer, alpha, m);
    } else {
        const separable_function<q> proto(n);
        auto alpha = build_form(lit, proto, [](const function_literal &fn) { return fn.fn; });
        run_nd_with(p, r, timer, alpha, m);
    }
}

} // namespace detail

// Runs a validated problem. Module errors become an error report carrying the
// stable code; residuals computed before the failure stay attached.
inline report run(const problem &p)
{
    report r;
    r.kind = p.kind;
    r.input_digest = fnv1a_digest(p.document.dump());
    detail::phase_timer timer(r);
    try {
        if (p.kind == "solve2d") {
            detail::run_solve2d(p, r, timer);
        } else if (p.kind == "flat_section") {
            detail::run_flat_section(p, r, timer);
        } else if (p.kind == "verify") {
            detail::run_verify(p, r, timer);
        } else if (p.kind == "expand_jets") {
            detail::run_expand(p, r, timer);
        } else {
            detail::run_nd(p, r, timer);
        }
        timer.lap("verify");
        for (const auto &res : r.residuals) {
            if (!res.within_tolerance()) {
                r.ok = false;
                r.failure = std::make_pair(to_string(error_code::residual_exceeded), "residual '" + res.label + "' exceeds tolerance");
                break;
            }
        }
    } catch (const error &e) {
        r.ok = false;
        r.failure = std::make_pair(to_string(e.code()), std::string(e.what()));
        r.solution.reset();
    }
    return r;
}

// Writes text to path through a temporary sibling and a rename.
inline void write_atomically(const std::filesystem::path &path, const std::string &text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw error(error_code::parse_error, "cannot write " + tmp.string());
        }
        out << text;
        if (!out.flush()) {
            throw error(error_code::parse_error, "short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace kostant::io

#endif
