"""Command-line interface.

Exit codes: 0 success, 1 usage/configuration error, 2 data error (bad input
files, missing models).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as pl
from .media import CorpusError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="newsquality", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ingest", parents=[common], help="load and hash a corpus, write a summary")
    sub.add_parser("train-spam", parents=[common], help="train the synthetic-image classifier")
    sub.add_parser("build-concepts", parents=[common], help="build concept probability tables")
    p = sub.add_parser("train-ranker", parents=[common], help="train the news-quality ranker")
    p.add_argument("--variant", help="feature family: V, C, S or F")
    p = sub.add_parser("rank", parents=[common], help="filter, deduplicate and rank the stream")
    p.add_argument("--watch", action="store_true", default=None,
                   help="keep running and re-rank whenever the posts file changes")
    p = sub.add_parser("evaluate", parents=[common], help="score a ranker variant on labelled data")
    p.add_argument("variant", help="feature family: V, C, S or F")
    p = sub.add_parser("report", parents=[common], help="rebuild ranked.csv and gallery.html")
    p.add_argument("--ranking", help="ranking.json written by `rank` (default: <out>/ranking.json)")
    return parser


def _ingest(config: pl.PipelineConfig) -> dict:
    corpus = pl.load_stream(config)
    summary = {
        "posts": len(corpus.posts), "images": len(corpus.images),
        "skipped_images": corpus.skipped_images, "labels": len(corpus.labels),
        "concepts": len(corpus.concepts),
        "hashes": {iid: {"md5": rec.md5_hex, "phash": f"{rec.phash64:016x}",
                         "width": rec.width, "height": rec.height,
                         "posts": list(rec.source_post_ids)}
                   for iid, rec in sorted(corpus.images.items())},
    }
    config.out.mkdir(parents=True, exist_ok=True)
    (config.out / "ingest.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n",
                                            encoding="utf-8")
    return {k: v for k, v in summary.items() if k != "hashes"}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = pl.load_config(args.config, seed=args.seed, out_dir=args.out,
                                watch=getattr(args, "watch", None))
        variant = getattr(args, "variant", None)
        if variant is not None:
            pl.variant_names(variant)
    except (pl.ConfigError, OSError) as exc:
        print(f"newsquality: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "ingest":
            result = _ingest(config)
        elif args.command == "train-spam":
            result = pl.train_spam(config)["mean"]
        elif args.command == "build-concepts":
            t = pl.build_concepts(config)
            result = {"y_size": t.y_size, "n_size": t.n_size, "py": len(t.py), "pn": len(t.pn)}
        elif args.command == "train-ranker":
            result = pl.train_ranker(config, variant)
            result.pop("importance", None)
        elif args.command == "rank":
            if config.watch:
                try:
                    pl.watch_pipeline(config)
                except KeyboardInterrupt:
                    return EXIT_OK
            r = pl.run_pipeline(config).to_dict()
            r.pop("ranked")
            result = r
        elif args.command == "evaluate":
            m = pl.evaluate(config, variant)
            result = {k: m[k] for k in ("model_name", "prec_at", "ndcg_at", "map")}
        elif args.command == "report":
            ranking = Path(args.ranking) if args.ranking else config.out / "ranking.json"
            if not ranking.is_file():
                raise pl.ModelMissing(f"missing {ranking}; run `newsquality rank` first")
            paths = pl.report_from_ranking(ranking, config.out, config.images or None)
            result = {"csv": str(paths[0]), "html": str(paths[1])}
        else:  # pragma: no cover - argparse rejects unknown commands
            parser.error(f"unknown command {args.command}")
    except pl.ConfigError as exc:
        print(f"newsquality: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, pl.ModelMissing, OSError, ValueError, KeyError) as exc:
        print(f"newsquality: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps(result, sort_keys=True, indent=1))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
