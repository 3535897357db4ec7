#include "motper/motper.h"

#include <new>
#include <string>

#include "document.hpp"
#include "motper/numerics.hpp"

using motper::doc::json;

struct motper_session {
    motper::doc::RunOptions opts;
    std::string error;
};

struct motper_motive {
    json norm;
    std::string text;
    int n = 0, s = 0;
};

struct motper_report {
    json doc;
    int exit_code = 1;
    std::string text, status;
};

static_assert(static_cast<int>(motper::ErrorCode::Internal) == MOTPER_E_INTERNAL, "status codes mirror ErrorCode");
static_assert(static_cast<int>(motper::ErrorCode::ParseError) == MOTPER_E_PARSE, "status codes mirror ErrorCode");

namespace {

motper_status code_of(motper::ErrorCode c) { return static_cast<motper_status>(static_cast<int>(c)); }

// runs f, turning exceptions into status codes and a message on the session
template <class F>
motper_status guarded(motper_session* s, F&& f) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    s->error.clear();
    try {
        f();
        return MOTPER_OK;
    } catch (const motper::Error& e) {
        s->error = e.what();
        return code_of(e.code());
    } catch (const json::exception& e) {
        s->error = e.what();
        return MOTPER_E_PARSE;
    } catch (const std::bad_alloc&) {
        s->error = "out of memory";
        return MOTPER_E_INTERNAL;
    } catch (const std::exception& e) {
        s->error = e.what();
        return MOTPER_E_INTERNAL;
    }
}

motper_status bad(motper_session* s, const char* msg) {
    if (s) s->error = msg;
    return MOTPER_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* motper_version(void) { return motper::doc::kVersion; }

const char* motper_status_name(motper_status s) {
    if (s == MOTPER_OK) return "Ok";
    if (s < MOTPER_OK || s > MOTPER_E_INTERNAL) return "Unknown";
    return motper::error_name(static_cast<motper::ErrorCode>(s));
}

motper_status motper_session_create(motper_session** out) {
    if (!out) return MOTPER_E_INVALID_ARGUMENT;
    *out = new (std::nothrow) motper_session();
    return *out ? MOTPER_OK : MOTPER_E_INTERNAL;
}

void motper_session_destroy(motper_session* s) { delete s; }

const char* motper_session_last_error(const motper_session* s) { return s ? s->error.c_str() : "no session"; }

motper_status motper_session_set_precision(motper_session* s, long wb, long gb, long cf) {
    return guarded(s, [&] {
        motper::PrecisionContext(wb, gb, cf).validate();
        s->opts.bits = wb;
        s->opts.guard_bits = gb;
        s->opts.confirm_factor = cf;
    });
}

motper_status motper_session_set_working_bits(motper_session* s, long wb) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    if (wb < 16 || wb > (1L << 20)) return bad(s, "working bits out of range");
    s->opts.bits = wb;
    return MOTPER_OK;
}

motper_status motper_session_set_guard_bits(motper_session* s, long gb) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    if (gb < 0 || gb > (1L << 16)) return bad(s, "guard bits out of range");
    s->opts.guard_bits = gb;
    return MOTPER_OK;
}

motper_status motper_session_set_confirm_factor(motper_session* s, long cf) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    if (cf < 2 || cf > 16) return bad(s, "confirm factor must lie in [2, 16]");
    s->opts.confirm_factor = cf;
    return MOTPER_OK;
}

motper_status motper_session_set_max_height(motper_session* s, const char* h) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    if (!h) return bad(s, "null height");
    s->opts.max_height = std::string(h);
    return MOTPER_OK;
}

motper_status motper_session_set_seed(motper_session* s, uint64_t seed) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    s->opts.seed = seed;
    return MOTPER_OK;
}

motper_status motper_session_set_count(motper_session* s, int count) {
    if (!s) return MOTPER_E_INVALID_ARGUMENT;
    if (count < 1 || count > 10000) return bad(s, "count must lie in [1, 10000]");
    s->opts.count = count;
    return MOTPER_OK;
}

motper_status motper_motive_parse(motper_session* s, const char* text, motper_motive** out) {
    if (!out) return bad(s, "null output");
    *out = nullptr;
    if (!text) return bad(s, "null input");
    return guarded(s, [&] {
        auto m = std::make_unique<motper_motive>();
        m->norm = motper::doc::normalize_descriptor(motper::doc::parse_text(text), s->opts);
        m->n = m->norm["n"].get<int>();
        m->s = m->norm["s"].get<int>();
        m->text = m->norm.dump(2);
        *out = m.release();
    });
}

void motper_motive_destroy(motper_motive* m) { delete m; }
const char* motper_motive_json(const motper_motive* m) { return m ? m->text.c_str() : ""; }
int motper_motive_n(const motper_motive* m) { return m ? m->n : 0; }
int motper_motive_s(const motper_motive* m) { return m ? m->s : 0; }

static motper_status run_json(motper_session* s, const char* command, const json& in, motper_report** out) {
    return guarded(s, [&] {
        auto o = motper::doc::run(command, in, s->opts);
        auto r = std::make_unique<motper_report>();
        r->doc = std::move(o.report);
        r->exit_code = o.exit_code;
        r->status = r->doc["status"].get<std::string>();
        *out = r.release();
    });
}

motper_status motper_run(motper_session* s, const char* command, const char* input, motper_report** out) {
    if (!out) return bad(s, "null output");
    *out = nullptr;
    if (!command || !input) return bad(s, "null command or input");
    json in;
    motper_status st = guarded(s, [&] { in = motper::doc::parse_text(input); });
    if (st != MOTPER_OK) return st;
    return run_json(s, command, in, out);
}

motper_status motper_run_motive(motper_session* s, const char* command, const motper_motive* m, motper_report** out) {
    if (!out) return bad(s, "null output");
    *out = nullptr;
    if (!command || !m) return bad(s, "null command or motive");
    return run_json(s, command, m->norm, out);
}

void motper_report_destroy(motper_report* r) { delete r; }

const char* motper_report_json(motper_report* r, int indent) {
    if (!r) return "";
    r->text = r->doc.dump(indent < 0 ? -1 : indent);
    return r->text.c_str();
}

int motper_report_exit_code(const motper_report* r) { return r ? r->exit_code : 1; }
const char* motper_report_status(const motper_report* r) { return r ? r->status.c_str() : ""; }

}  // extern "C"
