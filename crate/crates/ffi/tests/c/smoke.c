#include <stdio.h>
#include "alm_svm.h"

int main(void) {
    const double x[] = {2.0, 1.0, -1.0, -2.0};
    const double y[] = {1.0, 1.0, -1.0, -1.0};
    AlmDataset *data = NULL;
    AlmModel *model = NULL;
    AlmParams params;
    AlmReport report;
    double pred[4];

    if (alm_params_default(ALM_TASK_SVC, &params) != ALM_STATUS_OK) return 10;
    params.c = 10.0;
    if (alm_dataset_from_dense(x, y, 4, 1, &data) != ALM_STATUS_OK) return 11;
    if (alm_train(data, &params, &model, &report) != ALM_STATUS_OK) return 12;
    if (alm_model_predict(model, data, pred, 4) != ALM_STATUS_OK) return 13;
    for (int i = 0; i < 4; i++) {
        if (pred[i] != y[i]) return 14;
    }
    if (alm_model_load("/nonexistent", &model) != ALM_STATUS_IO || alm_last_error() == NULL) return 15;
    printf("version=%s k=%zu it_sn=%zu\n", alm_version(), report.outer_iterations, report.newton_iterations);
    alm_model_free(model);
    alm_dataset_free(data);
    return 0;
}
