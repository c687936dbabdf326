macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $module;

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(replay_update, "../examples/replay_update.rs", replay_update_example_runs);
example!(baseline_prompts, "../examples/baseline_prompts.rs", baseline_prompts_example_runs);
example!(error_ledger, "../examples/error_ledger.rs", error_ledger_example_runs);
example!(difficulty, "../examples/difficulty.rs", difficulty_example_runs);
example!(temperature_selection, "../examples/temperature_selection.rs", temperature_selection_example_runs);
example!(checkmark_report, "../examples/checkmark_report.rs", checkmark_report_example_runs);
example!(model_registry, "../examples/model_registry.rs", model_registry_example_runs);
example!(workspace_batch, "../examples/workspace_batch.rs", workspace_batch_example_runs);
