#ifndef AURA_H
#define AURA_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  AURA_STATUS_OK = 0,
  AURA_STATUS_NULL_ARGUMENT = 1,
  AURA_STATUS_INVALID_UTF8 = 2,
  AURA_STATUS_INVALID_ARGUMENT = 3,
  AURA_STATUS_ENGINE = 4,
  AURA_STATUS_PANIC = 5,
} AuraStatus;

typedef enum {
  AURA_MODE_IDLE = 0,
  AURA_MODE_CALIBRATING = 1,
  AURA_MODE_PAINTING = 2,
  AURA_MODE_REFILL = 3,
  AURA_MODE_WITHDRAWN = 4,
  AURA_MODE_PAUSED = 5,
  AURA_MODE_STOPPED = 6,
} AuraMode;

/**
 * Opaque session handle.
 */
typedef struct AuraSession AuraSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next library call on the same thread.
 */
const char *aura_last_error(void);

/**
 * Creates a session. `config_json` holds config overrides and may be null
 * for defaults. Returns null on failure.
 *
 * # Safety
 * `config_json` must be null or a valid NUL-terminated string.
 */
AuraSession *aura_session_new(const char *config_json);

/**
 * # Safety
 * `session` must be null or a handle from [`aura_session_new`] not yet freed.
 */
void aura_session_free(AuraSession *session);

/**
 * Queues one `TAG,timestamp_ms,value` sensor line.
 *
 * # Safety
 * `session` must be a live handle and `line` a valid NUL-terminated string.
 */
AuraStatus aura_session_push_sensor_line(AuraSession *session, const char *line, uint64_t at_ms);

/**
 * Queues artist text: a direct command or a painting prompt.
 *
 * # Safety
 * `session` must be a live handle and `text` a valid NUL-terminated string.
 */
AuraStatus aura_session_command(AuraSession *session, const char *text, uint64_t at_ms);

/**
 * Queues a physical reposition. With `outside` set, the coordinates are
 * ignored.
 *
 * # Safety
 * `session` must be a live handle.
 */
AuraStatus aura_session_robot_move(AuraSession *session,
                                   double x_mm,
                                   double y_mm,
                                   bool outside,
                                   uint64_t at_ms);

/**
 * Queues an artist stroke given as `{"color":[r,g,b],"width_mm":w,"path":[[x,y],...]}`.
 *
 * # Safety
 * `session` must be a live handle and `stroke_json` a valid NUL-terminated string.
 */
AuraStatus aura_session_artist_stroke_json(AuraSession *session,
                                           const char *stroke_json,
                                           uint64_t at_ms);

/**
 * Commits queued inputs and one tick at `now_ms`. The number of committed
 * events is written to `out_events` when it is not null.
 *
 * # Safety
 * `session` must be a live handle; `out_events` null or writable.
 */
AuraStatus aura_session_step(AuraSession *session, uint64_t now_ms, uint64_t *out_events);

/**
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
AuraStatus aura_session_mode(const AuraSession *session, AuraMode *out);

/**
 * FNV-1a 64 digest of the canvas RGB bytes.
 *
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
AuraStatus aura_session_digest(const AuraSession *session, uint64_t *out);

/**
 * Snapshot as JSON; free with [`aura_string_free`]. Null on failure.
 *
 * # Safety
 * `session` must be a live handle.
 */
char *aura_session_snapshot_json(const AuraSession *session);

/**
 * Canvas as P6 PPM bytes; free with [`aura_bytes_free`].
 *
 * # Safety
 * `session` must be a live handle; `out` and `out_len` writable.
 */
AuraStatus aura_session_canvas_ppm(const AuraSession *session, uint8_t **out, size_t *out_len);

/**
 * Runs a scenario (JSON text) headlessly and returns its summary as JSON;
 * free with [`aura_string_free`]. Null on failure.
 *
 * # Safety
 * `scenario_json` must be a valid NUL-terminated string.
 */
char *aura_run_scenario_json(const char *scenario_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void aura_string_free(char *s);

/**
 * # Safety
 * `bytes`/`len` must be null or exactly a buffer returned by this library.
 */
void aura_bytes_free(uint8_t *bytes, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AURA_H */
