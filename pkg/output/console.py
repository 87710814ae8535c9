"""Console output formatting for cost reports, runs, evaluations and ablations."""

from typing import Dict, List

from config.settings import GRADCHECK_TOLERANCE
from models.report import AblationTable, CostReport, EvalMetrics, RunReport


def format_percentage(value: float, decimals: int = 1) -> str:
    return f"{value * 100:.{decimals}f}%"


def format_millions(value: int) -> str:
    return f"{value / 1e6:.2f}M"


def format_giga(value: int) -> str:
    return f"{value / 1e9:.2f}G"


def print_header(title: str):
    print("\n" + "=" * 80)
    print(title.upper())
    print("=" * 80 + "\n")


def print_cost_report(report: CostReport, itemized: bool = True):
    print_header(f"Cost of {report.block} model")
    print(f"Input [N, C, T, V, M]: {report.input_shape}")
    print(f"Scales: {', '.join(report.scales)}")
    print()

    if itemized:
        print(f"   {'Parameters':<40} {'Count':>14}")
        print(f"   {'-' * 40} {'-' * 14}")
        for name, count in report.params.items.items():
            print(f"   {name:<40} {count:>14,}")
        print()
        print(f"   {'MACs':<40} {'Count':>14}")
        print(f"   {'-' * 40} {'-' * 14}")
        for name, count in report.macs.items.items():
            print(f"   {name:<40} {count:>14,}")
        print()

    print(f"Total parameters: {report.params.total:,} ({format_millions(report.params.total)})")
    print(f"Total MACs:       {report.macs.total:,} ({format_giga(report.macs.total)})")
    if report.reference_params is not None and report.reference_macs is not None:
        print()
        print(f"{'':<22} {'#Params':>10} {'MACs':>10}")
        print(f"{'GCN+TCN (t=9)':<22} {format_millions(report.reference_params.total):>10} "
              f"{format_giga(report.reference_macs.total):>10}")
        print(f"{'MS-TGN':<22} {format_millions(report.params.total):>10} {format_giga(report.macs.total):>10}")
        verdict = 'yes' if report.not_larger_than_reference else 'NO'
        print(f"Not larger than baseline: {verdict}")
    print()


def print_eval(metrics: EvalMetrics):
    print(f"Eval on {metrics.split} ({metrics.samples} sequences): "
          f"top-1 {format_percentage(metrics.top1, 2)}, top-5 {format_percentage(metrics.top5, 2)}")


def print_run_report(report: RunReport, last: int = 10):
    print_header("Training run")
    print(f"Parameters: {report.params:,}   MACs per sequence: {report.macs:,}")
    print()
    if report.epochs:
        shown = report.epochs[-last:]
        if len(shown) < len(report.epochs):
            print(f"   ... {len(report.epochs) - len(shown)} earlier epochs")
        print(f"   {'Epoch':<7} {'Loss':<10} {'Top-1':<9} {'LR':<10}")
        print(f"   {'-' * 7} {'-' * 10} {'-' * 9} {'-' * 10}")
        for e in shown:
            print(f"   {e.epoch:<7} {e.loss:<10.4f} {format_percentage(e.top1):<9} {e.lr:<10g}")
        print()
    if report.train_top1 is not None:
        print(f"Train top-1 (eval mode): {format_percentage(report.train_top1, 2)}")
    if report.eval is not None:
        print_eval(report.eval)
    print(f"Wall clock: {report.wall_clock_seconds:.1f}s")
    print()


def print_ablation_table(table: AblationTable):
    print_header(table.title)
    scale_columns = [c for c in table.columns if c not in ('block', 'top1', 'top5')]
    head = ''.join(f"{c:<7}" for c in scale_columns)
    print(f"   {'Row':<16} {head}{'Block':<10} {'Top-1':<9} {'Top-5':<9} {'#Params':<10} {'MACs':<8}")
    print("   " + "-" * (16 + 7 * len(scale_columns) + 50))
    for row in table.rows:
        marks = ''.join(f"{'x' if row.has_scale(c) else '':<7}" for c in scale_columns)
        print(f"   {row.name:<16} {marks}{row.block:<10} {format_percentage(row.top1):<9} "
              f"{format_percentage(row.top5):<9} {format_millions(row.params):<10} {format_giga(row.macs):<8}")
    print(f"\nEvaluated on the {table.split} split.\n")


def print_gradcheck(results: Dict[str, float], seeds: int, tolerance: float = GRADCHECK_TOLERANCE):
    print_header("Gradient check")
    for name, error in results.items():
        status = 'ok' if error < tolerance else 'FAIL'
        print(f"   {name:<32} {error:.3e}  {status}")
    worst = max(results.values()) if results else 0.0
    print(f"\nMax relative error over {seeds} seeds: {worst:.3e} (tolerance {tolerance:g})\n")


def print_convert_summary(results: List[Dict]):
    ok = [r for r in results if r['status'] == 'ok']
    print(f"\nChecked {len(results)} file(s): {len(ok)} ok, {len(results) - len(ok)} failed")
    for r in results:
        if r['status'] == 'ok':
            line = f"  {r['file']}: {r['frames']} frames, {r['persons']} person(s), label {r['label']}"
            if r.get('written'):
                line += f" -> {r['written']}"
        else:
            line = f"  {r['file']}: {r['error']}"
        print(line)
    print()
