#!/usr/bin/env python3
"""MS-TGN toolkit - multi-scale temporal graph networks for skeleton action recognition."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config.layouts import get_layout, layout_ids
from config.loader import PRESETS, available_scales, resolve_run_config
from config.settings import GRADCHECK_SEEDS, GRADCHECK_TOLERANCE, LOG_LEVEL, OUTPUT_DIR
from core.ablation import TABLES, ablation_run, table_rows
from core.accounting import cost_report
from core.errors import ConfigurationError, SequenceParseError
from core.gradcheck import run_gradcheck_suite
from core.network import build_model
from core.preprocess import DEFAULT_FRAMES, align_view, center_normalize, normalize_scale, pad_replay
from core.synthetic import synth_dataset
from core.trainer import evaluate, train
from data.converter import convert_document, is_named_joint_document
from data.manifest import load_dataset, write_dataset
from data.sequence_io import load_sequence, write_sequence
from models.config import BLOCKS, STREAMS, RunConfig
from output.checkpoint import load_checkpoint, save_checkpoint
from output.console import (print_ablation_table, print_convert_summary, print_cost_report, print_eval,
                            print_gradcheck, print_run_report)
from output.csv_export import export_ablation_csv, export_epoch_history
from output.json_export import emit_json, write_json

logger = logging.getLogger(__name__)

CONFIG_COMMANDS = ('train', 'eval', 'count', 'ablate')


def setup_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s', datefmt='%H:%M:%S')


class CliParser(argparse.ArgumentParser):
    """Usage errors exit 1 like every other validation error."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _comma_list(text: str) -> List[str]:
    items = [s.strip() for s in text.split(',') if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}")
    return items


def _weights(text: str) -> List[float]:
    try:
        return [float(s) for s in _comma_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> CliParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help=f"Preset ({', '.join(PRESETS)}) or .yaml/.json run config")
    common.add_argument('--seed', type=int, help='Run seed (overrides the config)')
    common.add_argument('--scales', type=_comma_list, help='Enabled scales, e.g. full,part,core')
    common.add_argument('--block', choices=BLOCKS, help='Layer type')
    common.add_argument('--stream', choices=STREAMS, help='Input stream')
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='Config override, e.g. train.epochs=5 (repeatable)')
    common.add_argument('--json', action='store_true', help='Print one JSON document to stdout')
    common.add_argument('--out', help='Output file or directory')
    common.add_argument('--verbose', '-v', action='store_true', help='Verbose output')

    parser = CliParser(description='Multi-scale temporal graph networks for skeleton action recognition')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    p = sub.add_parser('synth', parents=[common], help='Write a synthetic skeleton dataset')
    p.add_argument('--classes', type=int, default=2, help='Number of action classes')
    p.add_argument('--per-class', type=int, default=32, help='Training sequences per class')
    p.add_argument('--test-per-class', type=int, default=0, help='Test sequences per class')
    p.add_argument('--layout', default='ntu25', choices=layout_ids(), help='Skeleton layout')
    p.add_argument('--frames', type=int, default=64, help='Frames per sequence')

    p = sub.add_parser('convert', parents=[common], help='Validate and normalize sequence files')
    p.add_argument('files', nargs='+', help='Sequence documents (native or named-joint JSON)')
    p.add_argument('--layout', default='ntu25', choices=layout_ids(), help='Layout for named-joint documents')
    p.add_argument('--pad', type=int, nargs='?', const=DEFAULT_FRAMES, help='Replay-pad to this many frames')
    p.add_argument('--normalize', action='store_true', help='Center on the center joint of frame 0')
    p.add_argument('--align-view', action='store_true', help='Turn the frame-0 shoulder line onto the x axis')
    p.add_argument('--normalize-scale', action='store_true', help='Divide by the frame-0 mean bone length')

    p = sub.add_parser('train', parents=[common], help='Train a model on a dataset')
    p.add_argument('--dataset', help='Dataset directory (manifest.json)')

    p = sub.add_parser('eval', parents=[common], help='Evaluate checkpoints on a dataset')
    p.add_argument('--dataset', help='Dataset directory (manifest.json)')
    p.add_argument('--checkpoint', required=True, help='Joint-stream (or only) model checkpoint')
    p.add_argument('--bone-checkpoint', help='Bone-stream checkpoint to fuse with')
    p.add_argument('--fuse-weights', type=_weights, help='Stream weights, e.g. 1,1')

    sub.add_parser('count', parents=[common], help='Count parameters and MACs of a config')

    p = sub.add_parser('gradcheck', parents=[common], help='Finite-difference gradient suite')
    p.add_argument('--seeds', type=int, default=GRADCHECK_SEEDS, help='Seeds per check')

    p = sub.add_parser('ablate', parents=[common], help='Train and tabulate ablation rows')
    p.add_argument('--dataset', help='Dataset directory (manifest.json)')
    p.add_argument('--table', default='scales', choices=list(TABLES), help='Which ablation')
    return parser


def resolve_config(args) -> RunConfig:
    flags = {
        'model.scales': args.scales,
        'model.block': args.block,
        'model.stream': args.stream,
        'data.dataset': getattr(args, 'dataset', None),
    }
    run_config = resolve_run_config(args.config, args.overrides, args.seed, flags)
    logger.info(f"resolved config ({run_config.name}): {json.dumps(run_config.to_dict(), sort_keys=True)}")
    return run_config


def log_invocation(args, **resolved):
    """Commands without a run config log their resolved arguments instead."""
    options = {k: v for k, v in vars(args).items() if k not in ('overrides', 'config')}
    options.update(resolved)
    logger.info(f"resolved {args.command} options: {json.dumps(options, sort_keys=True, default=str)}")


def _dataset(run_config: RunConfig):
    if not run_config.data.dataset:
        raise ConfigurationError("no dataset given: pass --dataset or set data.dataset")
    return load_dataset(run_config.data.dataset)


def _out_dir(args, run_config: RunConfig) -> Path:
    return Path(args.out) if args.out else Path(OUTPUT_DIR) / run_config.name


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 0
    log_invocation(args, seed=seed)
    dataset = synth_dataset(args.classes, args.per_class, args.layout, args.frames, seed=seed,
                            test_per_class=args.test_per_class)
    out = Path(args.out) if args.out else Path(OUTPUT_DIR) / 'synthetic'
    manifest = write_dataset(dataset, out)
    if args.json:
        emit_json({'command': 'synth', 'out': str(out), 'manifest': str(manifest), 'sequences': len(dataset),
                   'classes': dataset.class_count, 'layout': dataset.layout_id})
    else:
        print(f"Wrote {len(dataset)} sequences ({dataset.class_count} classes, layout {dataset.layout_id}) to {out}")
    return 0


def _convert_one(path: Path, args, out_dir: Optional[Path]) -> Dict:
    raw = path.read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError:
        doc = None
    seq = convert_document(doc, args.layout) if is_named_joint_document(doc) else load_sequence(raw)
    if args.pad:
        seq = pad_replay(seq, args.pad)
    layout = get_layout(seq.layout_id)
    if args.normalize:
        seq = center_normalize(seq, layout)
    if args.align_view:
        seq = align_view(seq, layout)
    if args.normalize_scale:
        seq = normalize_scale(seq, layout)
    result = {'file': str(path), 'status': 'ok', 'frames': seq.frames, 'true_frames': seq.true_frames,
              'persons': seq.persons, 'label': seq.label, 'layout': seq.layout_id}
    if out_dir is not None:
        result['written'] = str(write_sequence(seq, out_dir / f"{path.stem}.json"))
    return result


def cmd_convert(args) -> int:
    log_invocation(args)
    out_dir = Path(args.out) if args.out else None
    results = []
    for name in args.files:
        path = Path(name)
        try:
            if not path.exists():
                raise SequenceParseError(f"no such file: {path}")
            results.append(_convert_one(path, args, out_dir))
        except (SequenceParseError, ValueError) as e:
            logger.warning(f"{path}: {e}")
            results.append({'file': str(path), 'status': 'error', 'error': str(e)})
    failed = sum(1 for r in results if r['status'] != 'ok')
    if args.json:
        emit_json({'command': 'convert', 'files': results, 'failed': failed})
    else:
        print_convert_summary(results)
    return 1 if failed else 0


def cmd_train(args) -> int:
    run_config = resolve_config(args)
    dataset = _dataset(run_config)
    out = _out_dir(args, run_config)
    model = build_model(run_config.model, scales=available_scales(run_config), seed=run_config.seed)
    eval_manifest = dataset.split('test') if dataset.has_split('test') else None
    checkpoint_dir = out / 'checkpoints' if run_config.train.checkpoint_every else None
    report = train(model, dataset, run_config.train, eval_manifest=eval_manifest,
                   data_config=run_config.data, checkpoint_dir=checkpoint_dir,
                   run_config=run_config.to_dict())
    save_checkpoint(model, out / 'model.npz')
    write_json(report.to_dict(), out / 'report.json')
    export_epoch_history(report, out / 'history.csv')
    if args.json:
        emit_json({'command': 'train', 'out': str(out), **report.to_dict()})
    else:
        print_run_report(report)
        print(f"Outputs written to {out}")
    return 0


def cmd_eval(args) -> int:
    run_config = resolve_config(args)
    dataset = _dataset(run_config)
    model = load_checkpoint(args.checkpoint)
    fusion = [load_checkpoint(args.bone_checkpoint)] if args.bone_checkpoint else []
    split = 'test' if dataset.has_split('test') else 'train'
    metrics = evaluate(model, dataset, dataset.split(split), fusion=fusion, weights=args.fuse_weights,
                       batch_size=run_config.train.batch_size, data_config=run_config.data)
    doc = {'command': 'eval', 'checkpoint': args.checkpoint, 'bone_checkpoint': args.bone_checkpoint,
           'weights': args.fuse_weights, 'top1': metrics.top1, 'top5': metrics.top5,
           'samples': metrics.samples, 'split': metrics.split}
    if args.out:
        write_json(doc, args.out)
    if args.json:
        emit_json(doc)
    else:
        print_eval(metrics)
    return 0


def cmd_count(args) -> int:
    run_config = resolve_config(args)
    config = run_config.model
    model = build_model(config, scales=available_scales(run_config), seed=run_config.seed)
    input_shape = (1, config.in_channels, config.input_frames, model.layout.num_joints, config.persons)
    report = cost_report(model, input_shape)
    doc = {'command': 'count', 'config': run_config.name, **report.to_dict()}
    if args.out:
        write_json(doc, args.out)
    if args.json:
        emit_json(doc)
    else:
        print_cost_report(report)
    return 0


def cmd_gradcheck(args) -> int:
    log_invocation(args, tolerance=GRADCHECK_TOLERANCE)
    results = run_gradcheck_suite(args.seeds)
    worst = max(results.values())
    passed = worst < GRADCHECK_TOLERANCE
    doc = {'command': 'gradcheck', 'seeds': args.seeds, 'tolerance': GRADCHECK_TOLERANCE,
           'max_relative_error': worst, 'checks': results, 'passed': passed}
    if args.out:
        write_json(doc, args.out)
    if args.json:
        emit_json(doc)
    else:
        print_gradcheck(results, args.seeds)
    if not passed:
        logger.error(f"gradient check failed: max relative error {worst:.3e}")
        return 2
    return 0


def cmd_ablate(args) -> int:
    run_config = resolve_config(args)
    dataset = _dataset(run_config)
    title, rows = table_rows(args.table)
    table = ablation_run(rows, run_config, dataset, scales=available_scales(run_config), title=title)
    if args.out:
        out = Path(args.out)
        write_json(table.to_dict(), out / f"ablation_{args.table}.json")
        export_ablation_csv(table, out / f"ablation_{args.table}.csv")
    if args.json:
        emit_json({'command': 'ablate', 'table': args.table, **table.to_dict()})
    else:
        print_ablation_table(table)
    return 0


COMMANDS = {
    'synth': cmd_synth,
    'convert': cmd_convert,
    'train': cmd_train,
    'eval': cmd_eval,
    'count': cmd_count,
    'gradcheck': cmd_gradcheck,
    'ablate': cmd_ablate,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Exit codes: 0 success, 1 usage or validation error, 2 runtime failure."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.verbose)

    if args.command in CONFIG_COMMANDS and not args.config:
        print(f"usage: main.py {args.command} --config PRESET_OR_FILE [options]", file=sys.stderr)
        print(f"error: {args.command} needs --config (presets: {', '.join(PRESETS)})", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command](args)
    except ValueError as e:
        logger.error(str(e))
        return 1
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return 2


def main():
    return run_cli(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
