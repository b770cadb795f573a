#ifndef MOFS_H
#define MOFS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MOFS_API __declspec(dllexport)
#else
#define MOFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mofs_status {
    MOFS_OK = 0,
    MOFS_E_INVALID_ARGUMENT = 1,
    MOFS_E_IO = 2,
    MOFS_E_PARSE = 3,
    MOFS_E_NETWORK = 4,
    MOFS_E_RUNTIME = 5,
    MOFS_E_PARTIAL_FAILURE = 6
} mofs_status;

typedef struct mofs_dataset mofs_dataset;
typedef struct mofs_experiment mofs_experiment;

/* Message of the last failed call on this thread; never NULL. */
MOFS_API const char* mofs_last_error(void);
MOFS_API const char* mofs_version(void);

/* 0 quiet, 1 info, 2 debug. */
MOFS_API void mofs_set_log_level(int level);

/* Strings returned through out-parameters must be released with this. */
MOFS_API void mofs_string_free(char* s);

/* Datasets */
MOFS_API mofs_status mofs_dataset_load_csv(const char* path, const char* target_column, mofs_dataset** out);
MOFS_API mofs_status mofs_dataset_load_arff(const char* path, mofs_dataset** out);
MOFS_API mofs_status mofs_dataset_fetch_openml(int did, const char* cache_dir, mofs_dataset** out);
/* informative_out (optional) receives up to `informative_capacity` sorted indices. */
MOFS_API mofs_status mofs_dataset_synthetic(size_t n, size_t p, size_t k_informative, double noise_sd, uint64_t seed,
                                            mofs_dataset** out, size_t* informative_out, size_t informative_capacity);
MOFS_API size_t mofs_dataset_rows(const mofs_dataset* d);
MOFS_API size_t mofs_dataset_cols(const mofs_dataset* d);
MOFS_API mofs_status mofs_dataset_write_csv(const mofs_dataset* d, const char* path);
MOFS_API void mofs_dataset_free(mofs_dataset* d);

/* Experiments, configured by a JSON document. */
MOFS_API mofs_status mofs_experiment_from_json(const char* json_text, mofs_experiment** out);
MOFS_API mofs_status mofs_experiment_from_file(const char* path, mofs_experiment** out);
MOFS_API mofs_status mofs_experiment_set_workers(mofs_experiment* e, size_t workers);
MOFS_API mofs_status mofs_experiment_set_output_dir(mofs_experiment* e, const char* dir);
/* Writes the result directory; summary_json (optional) receives the per-run
   summary. Returns MOFS_E_PARTIAL_FAILURE when some runs failed. */
MOFS_API mofs_status mofs_experiment_run(mofs_experiment* e, char** summary_json);
/* JSON array of {fold, hyperparams, perf, evaluations}. */
MOFS_API mofs_status mofs_experiment_pretune(mofs_experiment* e, char** result_json);
MOFS_API void mofs_experiment_free(mofs_experiment* e);

/* Writes report CSVs under <dir>/report; ranks_json (optional) receives the ranks. */
MOFS_API mofs_status mofs_report(const char* result_dir, char** ranks_json);

/* Metrics on interleaved (perf, cost) pairs. */
MOFS_API mofs_status mofs_hypervolume_2d(const double* points, size_t n, double ref_perf, double ref_cost,
                                         double* out);
/* front_out[i] receives the 1-based front of point i. */
MOFS_API mofs_status mofs_nondominated_sort(const double* points, size_t n, size_t* front_out);

#ifdef __cplusplus
}
#endif

#endif
