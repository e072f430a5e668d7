// Copyright 2026 The Pearl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to the pearl simulator. Every call returns a pearl_status;
 * pearl_last_error() holds the message of the most recent failure on the
 * calling thread. Strings returned through `char**` are owned by the caller
 * and released with pearl_free(). */

#ifndef PEARL_PEARL_H_
#define PEARL_PEARL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(PEARL_BUILDING_LIBRARY)
#define PEARL_API __attribute__((visibility("default")))
#else
#define PEARL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pearl_status {
  PEARL_OK = 0,
  PEARL_E_INVALID_ARGUMENT = 1,
  PEARL_E_OUT_OF_RANGE = 2,
  PEARL_E_WOM_INVARIANT = 3,
  PEARL_E_DOUBLE_PROGRAM = 4,
  PEARL_E_UNMAPPED = 5,
  PEARL_E_MODE_REJECTED = 6,
  PEARL_E_DEVICE_FULL = 7,
  PEARL_E_CORRUPT = 8,
  PEARL_E_IO = 9,
  PEARL_E_NO_CLOAK = 10,
  PEARL_E_UNDECODABLE = 11,
  PEARL_E_INTERNAL = 12
} pearl_status;

typedef enum pearl_volume {
  PEARL_VOLUME_PUBLIC = 0,
  PEARL_VOLUME_HIDDEN = 1
} pearl_volume;

typedef struct pearl_device pearl_device;
typedef struct pearl_ftl pearl_ftl;

PEARL_API const char* pearl_version(void);
PEARL_API const char* pearl_status_name(pearl_status status);
PEARL_API const char* pearl_last_error(void);
PEARL_API void pearl_free(void* p);

/* ---- device ---- */

typedef struct pearl_device_info {
  uint32_t blocks;
  uint32_t pages_per_block;
  uint32_t page_bytes;
  uint64_t reads;
  uint64_t programs;
  uint64_t erases;
  uint64_t clock_us;
} pearl_device_info;

/* `preset` is "desk" or "paper". */
PEARL_API pearl_status pearl_device_create(const char* preset, pearl_device** out);
/* Restores a device from a snapshot file. */
PEARL_API pearl_status pearl_device_open(const char* path, pearl_device** out);
PEARL_API pearl_status pearl_device_save(const pearl_device* dev, const char* path);
PEARL_API pearl_status pearl_device_info_get(const pearl_device* dev, pearl_device_info* out);
/* The device must outlive every FTL opened on it. */
PEARL_API void pearl_device_destroy(pearl_device* dev);

/* ---- ftl ---- */

/* `config` holds `key = value` lines and may be NULL. */
PEARL_API pearl_status pearl_format(pearl_device* dev, const char* config,
                                    const char* public_password);
/* A NULL hidden password mounts the public volume only. */
PEARL_API pearl_status pearl_mount(pearl_device* dev, const char* config,
                                   const char* public_password,
                                   const char* hidden_password, pearl_ftl** out);
/* Baseline FTL on a fresh device. Its state is not persisted. */
PEARL_API pearl_status pearl_dftl_create(pearl_device* dev, pearl_ftl** out);
/* Persists metadata (PEARL) or flushes the mapping cache (DFTL). */
PEARL_API pearl_status pearl_unmount(pearl_ftl* ftl);
PEARL_API void pearl_ftl_destroy(pearl_ftl* ftl);

typedef struct pearl_volume_info {
  int available;
  uint64_t payload_bytes; /* per logical page */
  uint64_t pages;
} pearl_volume_info;

PEARL_API pearl_status pearl_volume_info_get(const pearl_ftl* ftl, pearl_volume volume,
                                             pearl_volume_info* out);

/* `len` may be shorter than a page; the rest is zero padded. */
PEARL_API pearl_status pearl_write_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn,
                                        const uint8_t* data, size_t len);
/* Copies up to `cap` bytes; `*len` receives the page payload size. */
PEARL_API pearl_status pearl_read_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn,
                                       uint8_t* buf, size_t cap, size_t* len);
PEARL_API pearl_status pearl_trim_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn);
/* Forces one garbage collection cycle. */
PEARL_API pearl_status pearl_gc(pearl_ftl* ftl);

typedef struct pearl_init_report {
  uint64_t public_pages;
  uint64_t hidden_pages;
  uint64_t rewrites;
  uint64_t gc_runs;
} pearl_init_report;

PEARL_API pearl_status pearl_init_device(pearl_ftl* ftl, double fill_fraction, uint64_t seed,
                                         pearl_init_report* out);
/* FTL counters as a JSON object. */
PEARL_API pearl_status pearl_ftl_stats_json(const pearl_ftl* ftl, char** json);

/* ---- codes ---- */

/* `code` is a builtin name ("3,5", "2,3") or the text of a code table.
 * `*ok` is 1 when every property holds, including equal partition. */
PEARL_API pearl_status pearl_verify_code(const char* code, int* ok, char** report_json);

/* ---- snapshots ---- */

/* One record per page, as text. */
PEARL_API pearl_status pearl_snapshot_classify(const char* path, const char* public_password,
                                               char** records);
/* Transition and UI1 records between two images. */
PEARL_API pearl_status pearl_snapshot_diff(const char* earlier, const char* later,
                                           const char* public_password, uint64_t* flagged,
                                           uint64_t* alarms, char** records);

/* ---- experiments ---- */

typedef enum pearl_experiment {
  PEARL_ATTACK_FREQUENCY = 0,
  PEARL_ATTACK_TRANSITIONS = 1,
  PEARL_ATTACK_UI1 = 2
} pearl_experiment;

typedef struct pearl_attack_params {
  pearl_experiment experiment;
  const char* preset;   /* NULL means "desk" */
  const char* code;     /* NULL means "3,5" */
  uint32_t trials;
  uint64_t seed;
  uint32_t ops;         /* transitions/ui1; 0 means 10000 */
  int hidden;           /* frequency: write hidden data */
  int broken_allocator; /* transitions/ui1 */
} pearl_attack_params;

/* `*distinguished` is 1 when the adversary wins. */
PEARL_API pearl_status pearl_attack(const pearl_attack_params* params, int* distinguished,
                                    char** report_json);

typedef struct pearl_bench_params {
  const char* preset;      /* NULL means "desk" */
  const char* ftl;         /* "dftl" or "pearl" */
  const char* config;      /* PEARL key = value lines, may be NULL */
  const char* trace;       /* trace file; NULL selects a synthetic workload */
  pearl_volume volume;     /* synthetic target */
  double read_fraction;
  uint64_t count;
  uint64_t request_bytes;
  double hidden_fraction;  /* share of trace writes sent to the hidden volume */
  double fill_fraction;
  uint64_t seed;
  const char* out_prefix;  /* report files; may be NULL */
} pearl_bench_params;

PEARL_API void pearl_bench_defaults(pearl_bench_params* params);
PEARL_API pearl_status pearl_bench(const pearl_bench_params* params, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif  // PEARL_PEARL_H_
