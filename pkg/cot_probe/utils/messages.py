"""Message texts for the command-line interface."""

MESSAGES = {
    "run_done": "✅ {conditions} condition(s) evaluated. Report: {out_dir}/report.md",
    "sweep_done": "✅ Sweep of {conditions} cell(s) finished. Report: {out_dir}/report.md",
    "report_done": "📊 Report rebuilt in {out_dir}",
    "collect_done": "📝 Records written to {path}",
    "transform_header": "== {record_id} ==",
    "stub_running": "🧪 Stub endpoint on http://{host}:{port}/v1 (script: {script})",
    "config_error": "❌ Invalid configuration: {details}",
    "resume_required": (
        "⚠️ {details}\n"
        "Rerun with --resume to continue, or choose another --out directory."
    ),
    "general_error": "❌ {details}",
}
