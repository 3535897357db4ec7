#include "document.hpp"

#include <cmath>
#include <initializer_list>
#include <map>
#include <memory>
#include <set>

#include "motper/galois.hpp"
#include "motper/mt.hpp"

namespace motper::doc {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw Error(ErrorCode::ParseError, path + ": " + msg); }

// object with a closed key set
class Obj {
public:
    Obj(const json& j, std::string path, std::initializer_list<const char*> allowed)
        : Obj(j, std::move(path), std::vector<std::string>(allowed.begin(), allowed.end())) {}
    Obj(const json& j, std::string path, const std::vector<std::string>& allowed) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "expected an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key())) fail(at(it.key()), "unknown field");
    }
    const json* get(const char* k) const {
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }
    const json& need(const char* k) const {
        if (auto* v = get(k)) return *v;
        fail(at(k), "missing field");
    }
    std::string at(const std::string& k) const { return path_ + "." + k; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
};

std::string idx(const std::string& p, size_t i) { return p + "[" + std::to_string(i) + "]"; }

const json& array_of(const json& j, const std::string& path, long len = -1) {
    if (!j.is_array()) fail(path, "expected an array");
    if (len >= 0 && static_cast<long>(j.size()) != len) fail(path, "expected " + std::to_string(len) + " entries");
    return j;
}

// numbers travel as strings; JSON integers are exact and accepted too, binary floats are not
std::string num_str(const json& j, const std::string& path) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return j.dump();
    if (j.is_number_float()) fail(path, "write non-integer numbers as decimal strings");
    fail(path, "expected a number string");
}

std::string decimal(const json& j, const std::string& path) {
    std::string s = num_str(j, path);
    try {
        Real::parse(64, s);
    } catch (const Error&) {
        fail(path, "not a decimal number: '" + s + "'");
    }
    return s;
}

CStr cval(const json& j, const std::string& path) {
    if (j.is_array()) {
        array_of(j, path, 2);
        return CStr{decimal(j[0], idx(path, 0)), decimal(j[1], idx(path, 1))};
    }
    return CStr{decimal(j, path), "0"};
}
json cnorm(const CStr& c) { return json::array({c.re, c.im}); }

Q qval(const json& j, const std::string& path) {
    std::string s = num_str(j, path);
    try {
        return q_parse(s);
    } catch (const Error&) {
        fail(path, "not a rational: '" + s + "'");
    }
}

mpz_class zval(const json& j, const std::string& path) {
    std::string s = num_str(j, path);
    mpz_class z;
    std::string t = !s.empty() && s[0] == '+' ? s.substr(1) : s;
    if (t.empty() || z.set_str(t, 10) != 0) fail(path, "not an integer: '" + s + "'");
    return z;
}
json znorm(const mpz_class& z) {
    if (z.fits_slong_p()) return json(z.get_si());
    return json(z.get_str());
}

long lval(const json& j, const std::string& path, long lo, long hi) {
    mpz_class z = zval(j, path);
    if (z < lo || z > hi) fail(path, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return z.get_si();
}

// "1e6", "1000000", 1000000 -> positive integer
mpz_class height_of(const std::string& s, const std::string& path) {
    auto e = s.find_first_of("eE");
    Q v;
    try {
        v = q_parse(s.substr(0, e));
        if (e != std::string::npos) {
            long ex = std::stol(s.substr(e + 1));
            if (ex < 0 || ex > 1000) fail(path, "exponent out of range");
            mpz_class p;
            mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(ex));
            v *= p;
        }
    } catch (const Error&) {
        fail(path, "not a height: '" + s + "'");
    } catch (const std::exception&) {
        fail(path, "not a height: '" + s + "'");
    }
    v.canonicalize();
    if (v.get_den() != 1 || v <= 0) fail(path, "height must be a positive integer");
    return v.get_num();
}

std::uint64_t seed_of(const json& j, const std::string& path) {
    mpz_class z = zval(j, path);
    if (z < 0 || mpz_sizeinbase(z.get_mpz_t(), 2) > 64) fail(path, "seed must fit in 64 unsigned bits");
    return std::stoull(z.get_str());
}

// ---------------------------------------------------------------- settings

struct Settings {
    long bits = 256, guard = 32, confirm = 2;
    mpz_class H = 1000000;
    std::uint64_t seed = 0;
    PrecisionContext ctx() const { return PrecisionContext(bits, guard, confirm); }
};

Settings read_settings(const Obj& o, const RunOptions& opts, json& norm) {
    Settings st;
    if (auto* v = o.get("precision")) st.bits = lval(*v, o.at("precision"), 16, 1 << 20);
    if (auto* v = o.get("guard_bits")) st.guard = lval(*v, o.at("guard_bits"), 0, 1 << 16);
    if (auto* v = o.get("confirm_factor")) st.confirm = lval(*v, o.at("confirm_factor"), 2, 16);
    if (auto* v = o.get("max_height")) st.H = height_of(num_str(*v, o.at("max_height")), o.at("max_height"));
    if (auto* v = o.get("seed")) st.seed = seed_of(*v, o.at("seed"));
    if (opts.bits) st.bits = *opts.bits;
    if (opts.guard_bits) st.guard = *opts.guard_bits;
    if (opts.confirm_factor) st.confirm = *opts.confirm_factor;
    if (opts.max_height) st.H = height_of(*opts.max_height, "--max-height");
    if (opts.seed) st.seed = *opts.seed;
    try {
        st.ctx().validate();
    } catch (const Error& e) {
        fail(o.path(), std::string("precision settings: ") + e.what());
    }
    norm["precision"] = st.bits;
    norm["guard_bits"] = st.guard;
    norm["confirm_factor"] = st.confirm;
    norm["max_height"] = st.H.get_str();
    norm["seed"] = std::to_string(st.seed);
    return st;
}

// ---------------------------------------------------------------- descriptor

struct Parsed {
    OneMotive M;
    Settings st;
    json norm;
};

PointSpec read_point(const json& j, const std::string& path, json& norm) {
    Obj o(j, path, {"log", "curve", "lattice", "endo"});
    int kinds = (o.get("log") != nullptr) + (o.get("curve") != nullptr) + (o.get("lattice") != nullptr) + (o.get("endo") != nullptr);
    if (kinds != 1) fail(path, "give exactly one of log, curve, lattice, endo");
    if (auto* v = o.get("log")) {
        CStr z = cval(*v, o.at("log"));
        norm = {{"log", cnorm(z)}};
        return PointSpec::log(z);
    }
    if (auto* v = o.get("curve")) {
        Obj c(*v, o.at("curve"), {"x", "y"});
        CStr x = cval(c.need("x"), c.at("x")), y = cval(c.need("y"), c.at("y"));
        norm = {{"curve", {{"x", cnorm(x)}, {"y", cnorm(y)}}}};
        return PointSpec::curve(x, y);
    }
    if (auto* v = o.get("lattice")) {
        const json& a = array_of(*v, o.at("lattice"), 2);
        Q x = qval(a[0], idx(o.at("lattice"), 0)), y = qval(a[1], idx(o.at("lattice"), 1));
        norm = {{"lattice", {q_str(x), q_str(y)}}};
        return PointSpec::lattice(x, y);
    }
    Obj e(o.need("endo"), o.at("endo"), {"phi", "of", "plus"});
    const json& ph = array_of(e.need("phi"), e.at("phi"), 2);
    Q p1 = qval(ph[0], idx(e.at("phi"), 0)), p2 = qval(ph[1], idx(e.at("phi"), 1));
    long of = e.get("of") ? lval(*e.get("of"), e.at("of"), 0, 1 << 20) : 0;
    Q a = 0, b = 0;
    if (auto* pl = e.get("plus")) {
        array_of(*pl, e.at("plus"), 2);
        a = qval((*pl)[0], idx(e.at("plus"), 0));
        b = qval((*pl)[1], idx(e.at("plus"), 1));
    }
    norm = {{"endo", {{"phi", {q_str(p1), q_str(p2)}}, {"of", of}, {"plus", {q_str(a), q_str(b)}}}}};
    return PointSpec::endo(p1, p2, static_cast<int>(of), a, b);
}

EllSpec read_ell(const json& j, const std::string& path, json& norm) {
    if (!j.is_object()) {
        CStr c = cval(j, path);
        norm = {{"literal", cnorm(c)}};
        return EllSpec::literal(c);
    }
    Obj o(j, path, {"literal", "gamma", "reduced"});
    int kinds = (o.get("literal") != nullptr) + (o.get("gamma") != nullptr) + (o.get("reduced") != nullptr);
    if (kinds != 1) fail(path, "give exactly one of literal, gamma, reduced");
    if (auto* v = o.get("literal")) {
        CStr c = cval(*v, o.at("literal"));
        norm = {{"literal", cnorm(c)}};
        return EllSpec::literal(c);
    }
    if (auto* v = o.get("gamma")) {
        Q g = qval(*v, o.at("gamma"));
        norm = {{"gamma", q_str(g)}};
        return EllSpec::of_gamma(g);
    }
    Q g = qval(o.need("reduced"), o.at("reduced"));
    norm = {{"reduced", q_str(g)}};
    return EllSpec::reduced(g);
}

std::vector<std::array<mpz_class, 2>> read_shifts(const json& j, const std::string& path, int len, json& norm) {
    array_of(j, path, len);
    std::vector<std::array<mpz_class, 2>> out;
    norm = json::array();
    for (size_t i = 0; i < j.size(); ++i) {
        const json& e = array_of(j[i], idx(path, i), 2);
        out.push_back({zval(e[0], idx(idx(path, i), 0)), zval(e[1], idx(idx(path, i), 1))});
        norm.push_back({znorm(out.back()[0]), znorm(out.back()[1])});
    }
    return out;
}

Parsed read_descriptor(const json& j, const RunOptions& opts, const std::string& path) {
    Obj o(j, path, {"schema", "curve", "n", "s", "p", "q", "ell", "hints", "paths", "precision", "guard_bits", "confirm_factor",
                    "max_height", "seed"});
    Parsed out;
    json& norm = out.norm;
    norm = json::object();
    norm["schema"] = kDescriptorSchema;
    if (auto* v = o.get("schema"))
        if (!v->is_string() || v->get<std::string>() != kDescriptorSchema) fail(o.at("schema"), std::string("expected \"") + kDescriptorSchema + "\"");

    {
        Obj c(o.need("curve"), o.at("curve"), {"invariants", "lattice"});
        bool inv = c.get("invariants") != nullptr, lat = c.get("lattice") != nullptr;
        if (inv == lat) fail(c.path(), "give exactly one of invariants, lattice");
        const char* key = inv ? "invariants" : "lattice";
        const json& a = array_of(c.need(key), c.at(key), 2);
        CStr x = cval(a[0], idx(c.at(key), 0)), y = cval(a[1], idx(c.at(key), 1));
        out.M.curve = inv ? Curve::from_invariants(x, y) : Curve::from_lattice(x, y);
        norm["curve"] = {{key, json::array({cnorm(x), cnorm(y)})}};
    }

    auto points = [&](const char* key, std::vector<PointSpec>& dst) {
        const json& v = o.need(key);
        json arr = json::array();
        if (v.is_object()) {
            json pn;
            dst.push_back(read_point(v, o.at(key), pn));
            arr.push_back(pn);
        } else {
            array_of(v, o.at(key));
            if (v.empty()) fail(o.at(key), "at least one point");
            for (size_t i = 0; i < v.size(); ++i) {
                json pn;
                dst.push_back(read_point(v[i], idx(o.at(key), i), pn));
                arr.push_back(pn);
            }
        }
        norm[key] = arr;
    };
    points("p", out.M.p);
    points("q", out.M.q);
    out.M.n = static_cast<int>(out.M.p.size());
    out.M.s = static_cast<int>(out.M.q.size());
    if (auto* v = o.get("n"))
        if (lval(*v, o.at("n"), 1, 64) != out.M.n) fail(o.at("n"), "does not match the number of p points");
    if (auto* v = o.get("s"))
        if (lval(*v, o.at("s"), 1, 64) != out.M.s) fail(o.at("s"), "does not match the number of q points");
    norm["n"] = out.M.n;
    norm["s"] = out.M.s;

    {
        const json& e = o.need("ell");
        bool matrix = e.is_array() && !e.empty() && e[0].is_array();
        json rows = json::array();
        if (!matrix) {
            if (out.M.n != 1 || out.M.s != 1) fail(o.at("ell"), "a single entry needs n = s = 1; give an n x s matrix");
            json en;
            out.M.ell = {{read_ell(e, o.at("ell"), en)}};
            rows.push_back(json::array({en}));
        } else {
            array_of(e, o.at("ell"), out.M.n);
            for (int i = 0; i < out.M.n; ++i) {
                std::string ri = idx(o.at("ell"), i);
                const json& r = array_of(e[i], ri, out.M.s);
                std::vector<EllSpec> row;
                json rn = json::array();
                for (int k = 0; k < out.M.s; ++k) {
                    json en;
                    row.push_back(read_ell(r[k], idx(ri, k), en));
                    rn.push_back(en);
                }
                out.M.ell.push_back(row);
                rows.push_back(rn);
            }
        }
        norm["ell"] = rows;
    }

    json hn = json::object();
    if (auto* v = o.get("hints")) {
        Obj h(*v, o.at("hints"), {"p_torsion", "q_torsion", "q_equals_phi_p", "r_torsion"});
        if (auto* x = h.get("p_torsion")) hn["p_torsion"] = *(out.M.hints.p_torsion = lval(*x, h.at("p_torsion"), 1, 1L << 40));
        if (auto* x = h.get("q_torsion")) hn["q_torsion"] = *(out.M.hints.q_torsion = lval(*x, h.at("q_torsion"), 1, 1L << 40));
        if (auto* x = h.get("q_equals_phi_p")) {
            array_of(*x, h.at("q_equals_phi_p"), 2);
            Q a = qval((*x)[0], idx(h.at("q_equals_phi_p"), 0)), b = qval((*x)[1], idx(h.at("q_equals_phi_p"), 1));
            out.M.hints.q_equals_phi_p = std::make_pair(a, b);
            hn["q_equals_phi_p"] = {q_str(a), q_str(b)};
        }
        if (auto* x = h.get("r_torsion")) {
            if (!x->is_boolean()) fail(h.at("r_torsion"), "expected true or false");
            hn["r_torsion"] = *(out.M.hints.r_torsion = x->get<bool>());
        }
    }
    norm["hints"] = hn;

    json pn = json::object();
    if (auto* v = o.get("paths")) {
        Obj pa(*v, o.at("paths"), {"p_shift", "q_shift", "branch"});
        if (auto* x = pa.get("p_shift")) out.M.p_shift = read_shifts(*x, pa.at("p_shift"), out.M.n, pn["p_shift"]);
        if (auto* x = pa.get("q_shift")) out.M.q_shift = read_shifts(*x, pa.at("q_shift"), out.M.s, pn["q_shift"]);
        if (auto* x = pa.get("branch")) {
            array_of(*x, pa.at("branch"), out.M.n);
            json bn = json::array();
            for (int i = 0; i < out.M.n; ++i) {
                std::string ri = idx(pa.at("branch"), i);
                const json& r = array_of((*x)[i], ri, out.M.s);
                std::vector<mpz_class> row;
                json rn = json::array();
                for (int k = 0; k < out.M.s; ++k) {
                    row.push_back(zval(r[k], idx(ri, k)));
                    rn.push_back(znorm(row.back()));
                }
                out.M.branch.push_back(row);
                bn.push_back(rn);
            }
            pn["branch"] = bn;
        }
    }
    norm["paths"] = pn;

    out.st = read_settings(o, opts, norm);
    try {
        out.M.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return out;
}

// ---------------------------------------------------------------- output helpers

int digits_for(long bits) { return static_cast<int>(std::ceil(bits * 0.30103)) + 1; }

json cjson(const Complex& z, long bits) {
    int d = digits_for(bits);
    return json::array({z.re.to_string(d), z.im.to_string(d)});
}
json cmat_json(const CMatrix& m, long bits) {
    json out = json::array();
    for (auto& r : m) {
        json row = json::array();
        for (auto& z : r) row.push_back(cjson(z, bits));
        out.push_back(row);
    }
    return out;
}
json qmat_json(const QMat& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(q_str(m(i, j)));
        out.push_back(row);
    }
    return out;
}
json qt_json(const QT& u) { return json::array({q_str(u.x), q_str(u.y)}); }
json zs_json(const std::vector<mpz_class>& v) {
    json out = json::array();
    for (auto& z : v) out.push_back(z.get_str());
    return out;
}

json cm_json(const std::optional<CMData>& cm) {
    if (!cm) return nullptr;
    json j;
    j["min_poly"] = zs_json({cm->a, cm->b, cm->c});
    j["field_disc"] = cm->field_disc.get_str();
    j["kappa"] = cm->kappa_exact ? qt_json(*cm->kappa_exact) : json(nullptr);
    j["kappa_minpoly"] = cm->kappa_minpoly.empty() ? json(nullptr) : json(poly_str(cm->kappa_minpoly));
    j["residual_exp"] = cm->residual_exp;
    return j;
}

const char* kind_name(RelationPolynomial::Kind k) { return k == RelationPolynomial::Kind::Vanishes ? "vanishes" : "algebraic_value"; }

json relation_json(const RelationPolynomial& r) {
    json terms = json::array();
    for (auto& t : r.terms) {
        json e = json::object();
        for (int v = 0; v < kNumVars; ++v)
            if (t.exp[v]) e[var_name(v)] = t.exp[v];
        terms.push_back({{"coeff", qt_json(t.coeff)}, {"exp", e}});
    }
    return {{"name", r.name}, {"kind", kind_name(r.kind)}, {"weight", r.weight}, {"expression", r.expression()}, {"terms", terms}};
}

void add_check(json& j, const RelationCheck& c) {
    j["status"] = relation_status_name(c.status);
    j["certified"] = c.status == RelationStatus::Certified;
    j["residual_exp"] = c.residual_exp;
    j["scale_exp"] = c.scale_exp;
    j["value"] = c.value ? json(poly_str(c.value->poly)) : json(nullptr);
}

json check_json(const RelationCheck& c) {
    json j = {{"name", c.name}, {"kind", kind_name(c.kind)}};
    add_check(j, c);
    return j;
}

RelationPolynomial read_relation(const json& j, const std::string& path, json& norm) {
    Obj o(j, path, {"name", "kind", "weight", "expression", "terms", "status", "certified", "residual_exp", "scale_exp", "value"});
    RelationPolynomial r;
    const json& nm = o.need("name");
    if (!nm.is_string()) fail(o.at("name"), "expected a string");
    r.name = nm.get<std::string>();
    std::string kind = o.get("kind") && o.get("kind")->is_string() ? o.get("kind")->get<std::string>() : "vanishes";
    if (kind == "vanishes")
        r.kind = RelationPolynomial::Kind::Vanishes;
    else if (kind == "algebraic_value")
        r.kind = RelationPolynomial::Kind::AlgebraicValue;
    else
        fail(o.at("kind"), "expected vanishes or algebraic_value");
    if (auto* w = o.get("weight")) r.weight = static_cast<int>(lval(*w, o.at("weight"), 0, 64));
    const json& ts = array_of(o.need("terms"), o.at("terms"));
    std::map<std::string, int> vars;
    for (int v = 0; v < kNumVars; ++v) vars[var_name(v)] = v;
    for (size_t i = 0; i < ts.size(); ++i) {
        std::string tp = idx(o.at("terms"), i);
        Obj t(ts[i], tp, {"coeff", "exp"});
        Term term;
        const json& c = t.need("coeff");
        if (c.is_array()) {
            array_of(c, t.at("coeff"), 2);
            term.coeff = QT(qval(c[0], idx(t.at("coeff"), 0)), qval(c[1], idx(t.at("coeff"), 1)));
        } else {
            term.coeff = QT(qval(c, t.at("coeff")));
        }
        if (auto* e = t.get("exp")) {
            if (!e->is_object()) fail(t.at("exp"), "expected an object of variable powers");
            for (auto it = e->begin(); it != e->end(); ++it) {
                auto v = vars.find(it.key());
                if (v == vars.end()) fail(t.at("exp") + "." + it.key(), "unknown period variable");
                term.exp[v->second] = static_cast<int>(lval(it.value(), t.at("exp") + "." + it.key(), 0, 64));
            }
        }
        r.terms.push_back(term);
    }
    norm = relation_json(r);
    return r;
}

PeriodSource memo_source(const OneMotive& M, const std::optional<CMData>& cm) {
    auto cache = std::make_shared<std::map<long, PeriodMatrix>>();
    return [M, cm, cache](const PrecisionContext& c) {
        auto it = cache->find(c.bits());
        if (it == cache->end()) it = cache->emplace(c.bits(), build_period_matrix(M, c, cm)).first;
        return it->second;
    };
}

const char* structure_name(PairStructure::Kind k) {
    switch (k) {
        case PairStructure::Kind::PTorsion: return "p_torsion";
        case PairStructure::Kind::QTorsion: return "q_torsion";
        case PairStructure::Kind::Dependent: return "dependent";
        default: return "none";
    }
}

json dims_json(int b, int zp, int zz, int ur) { return {{"dim_B", b}, {"dim_Zprime", zp}, {"dim_ZmodZprime", zz}, {"dim_UR", ur}}; }

json classification_json(const ClassificationReport& rep) {
    json j;
    j["case"] = case_name(rep.id);
    j["cm"] = cm_json(rep.cm_data);
    j["dims"] = dims_json(rep.dims.dim_B, rep.dims.dim_Zprime, rep.dims.dim_ZmodZprime, rep.dims.dim_UR);
    CaseDims ed = expected_dims(rep.id);
    j["expected_dims"] = dims_json(ed.dim_B, ed.dim_Zprime, ed.dim_ZmodZprime, ed.dim_UR);
    j["dim_MT_E"] = rep.dim_MT_E;
    j["dim_MT_M"] = rep.dim_MT_M;
    j["ideal_rank"] = rep.verification.jacobian_rank;
    j["expected_ideal_rank"] = expected_ideal_rank(rep.id, rep.cm);
    j["antisymmetric"] = rep.antisymmetric;
    const PairStructure& st = rep.structure;
    j["structure"] = {{"kind", structure_name(st.kind)},
                      {"alpha", {q_str(st.a1), q_str(st.a2)}},
                      {"beta", {q_str(st.b1), q_str(st.b2)}},
                      {"phi", {q_str(st.phi1), q_str(st.phi2)}},
                      {"delta", {q_str(st.d1), q_str(st.d2)}}};
    auto memb = [](const std::optional<LatticeMembership>& m) -> json {
        if (!m) return nullptr;
        return {{"coords", {q_str(m->a), q_str(m->b)}}, {"order", m->order.get_str()}};
    };
    json consts;
    consts["p_torsion"] = memb(rep.p_torsion);
    consts["q_torsion"] = memb(rep.q_torsion);
    consts["dependence"] = rep.dependence ? json{{"phi", {q_str(rep.dependence->phi1), q_str(rep.dependence->phi2)}},
                                                 {"delta", {q_str(rep.dependence->delta1), q_str(rep.dependence->delta2)}}}
                                          : json(nullptr);
    consts["gamma_tilde"] = rep.data.gamma_tilde ? json(q_str(*rep.data.gamma_tilde)) : json(nullptr);
    j["constants"] = consts;
    json rels = json::array();
    for (size_t i = 0; i < rep.relations.size(); ++i) {
        json r = relation_json(rep.relations[i]);
        if (i < rep.verification.checks.size()) add_check(r, rep.verification.checks[i]);
        rels.push_back(r);
    }
    j["relations"] = rels;
    j["basis"] = rep.basis;
    j["heuristic_flags"] = rep.heuristic_flags;
    return j;
}

// exit code from a verification
int verdict(bool violated, bool heuristic) { return violated ? 1 : heuristic ? 2 : 0; }
const char* status_of(int code) { return code == 0 ? "certified" : code == 2 ? "heuristic" : "violated"; }

bool any_unverified(const std::vector<RelationCheck>& cs) {
    for (auto& c : cs)
        if (c.status != RelationStatus::Certified) return true;
    return false;
}

json element_json(const MTElement& r) {
    return {{"a", qmat_json(r.a)}, {"u", qmat_json(r.u)}, {"u_star", qmat_json(r.u_star)}, {"sigma", qmat_json(r.sigma)}};
}

QMat read_qmat(const json& j, const std::string& path, int rows, int cols) {
    array_of(j, path, rows);
    QMat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& r = array_of(j[i], idx(path, i), cols);
        for (int k = 0; k < cols; ++k) m(i, k) = qval(r[k], idx(idx(path, i), k));
    }
    return m;
}

MTElement read_element(const json& j, const std::string& path, int n, int s, json& norm) {
    Obj o(j, path, {"a", "u", "u_star", "sigma"});
    QMat a = read_qmat(o.need("a"), o.at("a"), 2, 2);
    QMat u = o.get("u") ? read_qmat(*o.get("u"), o.at("u"), n, 2) : QMat(n, 2);
    QMat us = o.get("u_star") ? read_qmat(*o.get("u_star"), o.at("u_star"), 2, s) : QMat(2, s);
    QMat sg = o.get("sigma") ? read_qmat(*o.get("sigma"), o.at("sigma"), n, s) : QMat(n, s);
    MTElement r;
    try {
        r = mt_make(a, u, us, sg);
    } catch (const Error& e) {
        fail(path, e.what());
    }
    norm = element_json(r);
    return r;
}

const char* block_name(Block b) {
    switch (b) {
        case Block::A: return "a";
        case Block::U: return "u";
        case Block::UStar: return "u_star";
        default: return "sigma";
    }
}

// ---------------------------------------------------------------- commands

struct Wrapped {
    json input;   // normalized
    json result;
    int code = 0;
    Settings st;
};

void cmd_periods(const Parsed& d, Wrapped& w) {
    const OneMotive& M = d.M;
    PrecisionContext ctx = d.st.ctx();
    auto cm = detect_cm(M.curve, ctx, d.st.H);
    PeriodMatrix pm = build_period_matrix(M, ctx, cm);
    PeriodMatrix dm = build_dual_period_matrix(M, ctx, cm);
    MatrixCheck dual = check_duality(M, ctx, cm);
    MatrixCheck lemma = check_lemma_identities(M, ctx, cm);
    DetCheck det = check_determinants(M, ctx, cm);
    auto mc = [](const MatrixCheck& c) { return json{{"ok", c.ok}, {"residual_exp", c.worst_exp}, {"failures", c.failures}}; };
    auto unit = [](const std::optional<Q>& q) { return q && (*q == 1 || *q == -1); };
    json& r = w.result;
    r["n"] = M.n;
    r["s"] = M.s;
    r["cm"] = cm_json(cm);
    r["period_matrix"] = cmat_json(pm.m, ctx.working_bits);
    r["dual_period_matrix"] = cmat_json(dm.m, ctx.working_bits);
    r["duality"] = mc(dual);
    r["lemma_identities"] = mc(lemma);
    r["determinants"] = {{"det_ratio", det.det_ratio ? json(q_str(*det.det_ratio)) : json(nullptr)},
                         {"dual_det_ratio", det.dual_det_ratio ? json(q_str(*det.dual_det_ratio)) : json(nullptr)}};
    w.code = dual.ok && lemma.ok && unit(det.det_ratio) && unit(det.dual_det_ratio) ? 0 : 1;
}

void cmd_classify(const Parsed& d, Wrapped& w) {
    PrecisionContext ctx = d.st.ctx();
    if (d.M.n != 1 || d.M.s != 1) {
        auto cm = detect_cm(d.M.curve, ctx, d.st.H);
        UnipotentDims u = unipotent_dims(d.M, cm, ctx, d.st.H);
        w.result = {{"case", nullptr}, {"cm", cm_json(cm)}, {"dims", dims_json(u.dim_B, u.dim_Zprime, u.dim_ZmodZprime, u.dim_UR)},
                    {"heuristic_flags", u.heuristic_flags}};
        w.code = u.heuristic_flags.empty() ? 0 : 2;
        return;
    }
    ClassificationReport rep = classify(d.M, ctx, d.st.H);
    w.result = classification_json(rep);
    w.code = verdict(rep.verification.any_violated(), rep.heuristic() || any_unverified(rep.verification.checks));
}

void cmd_verify(const Parsed& d, const Obj& o, Wrapped& w) {
    PrecisionContext ctx = d.st.ctx();
    if (d.M.n != 1 || d.M.s != 1) fail(o.path(), "relation lists are defined for n = s = 1");
    std::vector<RelationPolynomial> rels;
    json rn = json::array();
    const json& rs = array_of(o.need("relations"), o.at("relations"));
    for (size_t i = 0; i < rs.size(); ++i) {
        json one;
        rels.push_back(read_relation(rs[i], idx(o.at("relations"), i), one));
        rn.push_back(one);
    }
    w.input["relations"] = rn;
    auto cm = detect_cm(d.M.curve, ctx, d.st.H);
    PeriodMatrix pm;
    bool supplied = false;
    if (auto* v = o.get("period_matrix")) {
        supplied = true;
        pm = build_period_matrix(d.M, ctx, cm);  // shape and provenance
        const json& rows = array_of(*v, o.at("period_matrix"), pm.size());
        json mn = json::array();
        for (int i = 0; i < pm.size(); ++i) {
            std::string ri = idx(o.at("period_matrix"), i);
            const json& r = array_of(rows[i], ri, pm.size());
            json rown = json::array();
            for (int k = 0; k < pm.size(); ++k) {
                CStr c = cval(r[k], idx(ri, k));
                pm.m[i][k] = Complex::parse(ctx.bits(), c.re, c.im);
                rown.push_back(cnorm(c));
            }
            mn.push_back(rown);
        }
        w.input["period_matrix"] = mn;
    } else {
        pm = build_period_matrix(d.M, ctx, cm);
    }
    PeriodSource src = memo_source(d.M, cm);
    VerificationReport vr = verify_relations(pm, rels, ctx, d.st.H, cm, supplied ? nullptr : &src);
    json checks = json::array();
    for (auto& c : vr.checks) checks.push_back(check_json(c));
    w.result = {{"period_matrix_source", supplied ? "supplied" : "rebuilt"}, {"cm", cm_json(cm)}, {"checks", checks},
                {"ideal_rank", vr.jacobian_rank}};
    w.code = verdict(vr.any_violated(), !vr.all_certified());
}

json parameterization_json(const CaseParameterization& par) {
    json bound = json::array();
    for (auto b : par.bound) bound.push_back(block_name(b));
    return {{"free", par.free_names}, {"bound", bound}, {"formulas", par.formulas}};
}

void cmd_mt_sample(const Parsed& d, const Obj& o, const RunOptions& opts, Wrapped& w) {
    PrecisionContext ctx = d.st.ctx();
    if (d.M.n != 1 || d.M.s != 1) fail(o.path(), "case parameterizations are defined for n = s = 1");
    long count = 5;
    if (auto* v = o.get("count")) count = lval(*v, o.at("count"), 1, 10000);
    if (opts.count) count = *opts.count;
    if (count < 1 || count > 10000) fail("--count", "out of range [1, 10000]");
    w.input["count"] = count;
    ClassificationReport rep = classify(d.M, ctx, d.st.H);
    CaseParameterization par = case_parameterization(rep.id, rep.cm);
    PeriodMatrix pm = build_period_matrix(d.M, ctx, rep.cm_data);
    PeriodSource src = memo_source(d.M, rep.cm_data);
    json els = json::array();
    bool all_ok = true, violated = false;
    for (long t = 0; t < count; ++t) {
        std::uint64_t seed = d.st.seed + static_cast<std::uint64_t>(t);
        MTElement r = random_case_element(par, rep.data, rep.cm_data, seed);
        StabilizerResult sr = stabilizes(r, rep.relations, pm, ctx, rep.cm_data, &src);
        all_ok = all_ok && sr.stabilizes;
        violated = violated || sr.violated;
        json e = element_json(r);
        e["seed"] = std::to_string(seed);
        e["stabilizes"] = sr.stabilizes;
        els.push_back(e);
    }
    w.result = {{"case", case_name(rep.id)}, {"parameterization", parameterization_json(par)}, {"dim_MT_M", rep.dim_MT_M},
                {"elements", els}, {"heuristic_flags", rep.heuristic_flags}};
    w.code = verdict(violated, !all_ok || rep.heuristic());
}

void cmd_mt_act(const Parsed& d, const Obj& o, Wrapped& w) {
    PrecisionContext ctx = d.st.ctx();
    json en;
    MTElement r = read_element(o.need("element"), o.at("element"), d.M.n, d.M.s, en);
    w.input["element"] = en;
    if (d.M.n != 1 || d.M.s != 1) {
        auto cm = detect_cm(d.M.curve, ctx, d.st.H);
        PeriodMatrix moved = act(r, build_period_matrix(d.M, ctx, cm));
        w.result = {{"case", nullptr}, {"moved_period_matrix", cmat_json(moved.m, ctx.working_bits)}, {"checks", json::array()},
                    {"stabilizes", false}, {"heuristic_flags", {"no relation list outside n = s = 1"}}};
        w.code = 2;
        return;
    }
    ClassificationReport rep = classify(d.M, ctx, d.st.H);
    PeriodMatrix pm = build_period_matrix(d.M, ctx, rep.cm_data);
    PeriodSource src = memo_source(d.M, rep.cm_data);
    StabilizerResult sr = stabilizes(r, rep.relations, pm, ctx, rep.cm_data, &src);
    json checks = json::array();
    for (auto& c : sr.checks) checks.push_back(check_json(c));
    w.result = {{"case", case_name(rep.id)}, {"moved_period_matrix", cmat_json(act(r, pm).m, ctx.working_bits)},
                {"checks", checks}, {"stabilizes", sr.stabilizes}, {"heuristic_flags", rep.heuristic_flags}};
    w.code = verdict(sr.violated, !sr.stabilizes || rep.heuristic());
}

// named constants recomputed at any precision; decimals are exact rationals
std::function<Complex(const PrecisionContext&)> constant_of(const json& j, const std::string& path, json& norm) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        norm = s;
        if (s == "pi") return [](const PrecisionContext& c) { return Complex(Real::pi(c.bits())); };
        if (s == "two_pi_i") return [](const PrecisionContext& c) { return Complex::two_pi_i(c.bits()); };
        if (s == "i") return [](const PrecisionContext& c) { return Complex::i(c.bits()); };
        if (s == "e") return [](const PrecisionContext& c) { return Complex(exp(Real(c.bits(), 1L))); };
    }
    CStr c = cval(j, path);
    norm = cnorm(c);
    return [c](const PrecisionContext& x) { return Complex::parse(x.bits(), c.re, c.im); };
}

void cmd_relations(const json& in, const RunOptions& opts, Wrapped& w) {
    Obj o(in, "input", {"constants", "precision", "guard_bits", "confirm_factor", "max_height", "seed"});
    w.input = json::object();
    const json& cs = array_of(o.need("constants"), o.at("constants"));
    if (cs.size() < 2) fail(o.at("constants"), "need at least two constants");
    std::vector<std::function<Complex(const PrecisionContext&)>> fs;
    json cn = json::array();
    for (size_t i = 0; i < cs.size(); ++i) {
        json one;
        fs.push_back(constant_of(cs[i], idx(o.at("constants"), i), one));
        cn.push_back(one);
    }
    w.input["constants"] = cn;
    w.st = read_settings(o, opts, w.input);
    ValueSource src = [fs](const PrecisionContext& c) {
        std::vector<Complex> v;
        for (auto& f : fs) v.push_back(f(c));
        return v;
    };
    DetectionVerdict dv = find_integer_relation_escalating(src, w.st.H, w.st.ctx());
    w.result = {{"status", dv.found() ? "found" : "not_found_up_to_height"},
                {"coefficients", dv.found() ? zs_json(dv.relation.coeffs) : json(nullptr)},
                {"height", dv.found() ? json(dv.relation.height.get_str()) : json(nullptr)},
                {"residual_exp", dv.found() ? json(dv.relation.residual_exp) : json(nullptr)},
                {"height_bound", dv.height_bound.get_str()},
                {"bits_used", dv.bits_used},
                {"heuristic_flags", dv.found() ? json::array() : json::array({"no relation up to the height bound"})}};
    w.code = dv.found() ? 0 : 2;
}

}  // namespace

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line and column
        size_t pos = std::min<size_t>(e.byte ? e.byte - 1 : 0, text.size());
        long line = 1, col = 1;
        for (size_t i = 0; i < pos; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
}

json normalize_descriptor(const json& j, const RunOptions& opts) { return read_descriptor(j, opts, "descriptor").norm; }

Outcome run(const std::string& command, const json& raw, const RunOptions& opts) {
    static const std::set<std::string> commands = {"periods", "classify", "verify", "relations", "mt-sample", "mt-act"};
    if (!commands.count(command)) throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
    json in = raw;
    if (in.is_object() && in.contains("schema") && in["schema"] == kReportSchema) {
        if (!in.contains("input")) fail("report", "has no input");
        in = json(in["input"]);
    }
    Wrapped w;
    if (command == "relations") {
        cmd_relations(in, opts, w);
    } else {
        if (in.is_object() && in.contains("curve")) in = json{{"descriptor", in}};
        std::vector<std::string> keys = {"descriptor"};
        if (command == "verify") keys = {"descriptor", "relations", "period_matrix"};
        if (command == "mt-sample") keys = {"descriptor", "count"};
        if (command == "mt-act") keys = {"descriptor", "element"};
        Obj o(in, "input", keys);
        Parsed d = read_descriptor(o.need("descriptor"), opts, "input.descriptor");
        w.st = d.st;
        w.input = {{"descriptor", d.norm}};
        if (command == "periods") cmd_periods(d, w);
        if (command == "classify") cmd_classify(d, w);
        if (command == "verify") cmd_verify(d, o, w);
        if (command == "mt-sample") cmd_mt_sample(d, o, opts, w);
        if (command == "mt-act") cmd_mt_act(d, o, w);
    }
    Outcome out;
    out.exit_code = w.code;
    out.report = {{"schema", kReportSchema},
                  {"command", command},
                  {"input", w.input},
                  {"provenance",
                   {{"version", kVersion},
                    {"working_bits", w.st.bits},
                    {"guard_bits", w.st.guard},
                    {"confirm_factor", w.st.confirm},
                    {"max_height", w.st.H.get_str()},
                    {"seed", std::to_string(w.st.seed)}}},
                  {"status", status_of(w.code)},
                  {"exit_code", w.code},
                  {"result", w.result}};
    return out;
}

}  // namespace motper::doc
