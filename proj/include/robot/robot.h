/* C interface to the diverse trust-region optimizer library.
 *
 * All functions return robot_status; on ROBOT_ERROR a message is written to
 * the caller-supplied error buffer (always NUL-terminated, possibly
 * truncated). Handles are opaque and must be released with the matching
 * free function.
 */
#ifndef ROBOT_ROBOT_H
#define ROBOT_ROBOT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum robot_status {
  ROBOT_OK = 0,
  ROBOT_ERROR = 1
} robot_status;

typedef struct robot_config robot_config;

const char* robot_version(void);

/* Parses a key=value experiment config file. */
robot_status robot_config_load(const char* path, robot_config** out,
                               char* errbuf, size_t errcap);

void robot_config_free(robot_config* cfg);

/* Overrides applied after loading (CLI flags map onto these). */
robot_status robot_config_set_seed(robot_config* cfg, uint64_t seed,
                                   char* errbuf, size_t errcap);
robot_status robot_config_set_out_dir(robot_config* cfg, const char* out_dir,
                                      char* errbuf, size_t errcap);

/* Runs every repetition and writes trace_rep<k>.csv, final_solutions.csv and
 * summary.csv into the configured output directory. */
robot_status robot_run_experiment(const robot_config* cfg, char* errbuf,
                                  size_t errcap);

/* Recomputes the checkpointed summary from existing trace files and writes it
 * to out_path. diversity is one of: euclidean, none, owd, topk_disjoint. */
robot_status robot_summarize(const char* const* trace_paths, size_t n_paths,
                             int m, double tau, const char* diversity,
                             const char* out_path, char* errbuf, size_t errcap);

#ifdef __cplusplus
}
#endif

#endif /* ROBOT_ROBOT_H */
