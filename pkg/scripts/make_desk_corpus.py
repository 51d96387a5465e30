"""Generate the desk corpora and a ready-to-use pipeline config.

    python scripts/make_desk_corpus.py desk/
    newsquality train-spam --config desk/pipeline.cfg
"""
import argparse
from pathlib import Path

from newsquality import desk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--spam-per-class", type=int, default=250)
    ap.add_argument("--per-pattern", type=int, default=30,
                    help="training images per visual/concept/social bit pattern")
    ap.add_argument("--informative", default="visual,concept,social",
                    help="families that carry the planted quality signal")
    args = ap.parse_args()
    informative = tuple(f for f in args.informative.split(",") if f)
    cfg = desk.make_desk(args.out, args.seed, args.spam_per_class, args.per_pattern, informative)
    print(f"wrote desk corpora and {cfg}")


if __name__ == "__main__":
    main()
