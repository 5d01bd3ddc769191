// Generate a small synthetic cohort, run one cross-validation cell and print
// the pooled metrics and the table row.

#include <filesystem>
#include <iostream>

#include "voicescreen/cohort.hpp"
#include "voicescreen/eval.hpp"

int main(int argc, char** argv) {
    using namespace voicescreen;
    const std::filesystem::path dir = argc > 1 ? argv[1] : std::filesystem::temp_directory_path() / "voicescreen_quickstart";

    cohort::CohortConfig cc;
    cc.n_depressed = 6;
    cc.n_healthy = 6;
    cc.recording_duration_s = 40.0;
    const auto manifest = cohort::generate_cohort(cc, dir);

    PipelineConfig cfg;
    cfg.sampling.clip_duration_s = 10.0;
    cfg.sampling.clip_count = 3;
    cfg.folds = 3;
    cfg.train.epochs = 60;
    cfg.train.learning_rate = 1e-2;
    const auto report = eval::run_cross_validation(manifest, cfg);

    std::cout << eval::render_markdown(eval::table_rows(eval::cv_report_json(report)));
    for (const auto& o : report.outcomes) {
        std::cout << o.id << " label=" << o.label << " predicted=" << o.predicted << "\n";
    }
    return 0;
}
