#ifndef MOTPER_H
#define MOTPER_H

/* C interface to libmotper. All handles are opaque; every call returns a status code and leaves a
   message in the session (motper_session_last_error). Strings returned by the library stay valid
   until the owning handle is destroyed or reused. */

#include <stdint.h>

#if defined(_WIN32)
#define MOTPER_API __declspec(dllexport)
#else
#define MOTPER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum motper_status {
    MOTPER_OK = 0,
    MOTPER_E_INVALID_ARGUMENT = 1,
    MOTPER_E_SINGULAR_CURVE,
    MOTPER_E_DEGENERATE_LATTICE,
    MOTPER_E_POLE_AT_LATTICE_POINT,
    MOTPER_E_POLE_OR_ZERO,
    MOTPER_E_NOT_ON_CURVE,
    MOTPER_E_NON_CONVERGENCE,
    MOTPER_E_INCONCLUSIVE,
    MOTPER_E_RECONSTRUCTION_FAILURE,
    MOTPER_E_NOT_LATTICE_POINT,
    MOTPER_E_POLE_CONFIGURATION,
    MOTPER_E_INSUFFICIENT_PRECISION,
    MOTPER_E_AMBIGUOUS_CLASSIFICATION,
    MOTPER_E_MISSING_CONSTANT,
    MOTPER_E_NON_RATIONAL_CONSTANT,
    MOTPER_E_RELATION_VIOLATED,
    MOTPER_E_SHAPE_MISMATCH,
    MOTPER_E_SINGULAR,
    MOTPER_E_UNSUPPORTED,
    MOTPER_E_PARSE,
    MOTPER_E_INTERNAL
} motper_status;

typedef struct motper_session motper_session;
typedef struct motper_motive motper_motive;
typedef struct motper_report motper_report;

MOTPER_API const char* motper_version(void);
MOTPER_API const char* motper_status_name(motper_status s);

MOTPER_API motper_status motper_session_create(motper_session** out);
MOTPER_API void motper_session_destroy(motper_session* s);
MOTPER_API const char* motper_session_last_error(const motper_session* s);

/* Settings made here override the ones in input documents. */
MOTPER_API motper_status motper_session_set_precision(motper_session* s, long working_bits, long guard_bits, long confirm_factor);
MOTPER_API motper_status motper_session_set_working_bits(motper_session* s, long working_bits);
MOTPER_API motper_status motper_session_set_guard_bits(motper_session* s, long guard_bits);
MOTPER_API motper_status motper_session_set_confirm_factor(motper_session* s, long confirm_factor);
/* decimal integer, optionally with an exponent ("1e6") */
MOTPER_API motper_status motper_session_set_max_height(motper_session* s, const char* height);
MOTPER_API motper_status motper_session_set_seed(motper_session* s, uint64_t seed);
MOTPER_API motper_status motper_session_set_count(motper_session* s, int count);

/* A validated motive descriptor (JSON text). Unknown fields are rejected. */
MOTPER_API motper_status motper_motive_parse(motper_session* s, const char* json_text, motper_motive** out);
MOTPER_API void motper_motive_destroy(motper_motive* m);
/* normalized descriptor, with the effective precision settings filled in */
MOTPER_API const char* motper_motive_json(const motper_motive* m);
MOTPER_API int motper_motive_n(const motper_motive* m);
MOTPER_API int motper_motive_s(const motper_motive* m);

/* command: periods, classify, verify, relations, mt-sample, mt-act.
   input: a descriptor, a wrapped input {"descriptor": ..., ...} or an earlier report. */
MOTPER_API motper_status motper_run(motper_session* s, const char* command, const char* input_json, motper_report** out);
MOTPER_API motper_status motper_run_motive(motper_session* s, const char* command, const motper_motive* m, motper_report** out);
MOTPER_API void motper_report_destroy(motper_report* r);
/* indent < 0: compact */
MOTPER_API const char* motper_report_json(motper_report* r, int indent);
/* 0 all certified, 2 heuristic only, 1 violation */
MOTPER_API int motper_report_exit_code(const motper_report* r);
MOTPER_API const char* motper_report_status(const motper_report* r);

#ifdef __cplusplus
}
#endif

#endif
