"""Train and score the V, C, S and F rankers on a desk corpus; print a MAP table.

    python scripts/make_desk_corpus.py desk/
    python scripts/run_variant_eval.py desk/pipeline.cfg
"""
import argparse

from newsquality import pipeline as pl


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--variants", default="VCSF")
    args = ap.parse_args()
    cfg = pl.load_config(args.config)
    pl.train_spam(cfg)
    pl.build_concepts(cfg)
    print(f"{'model':8} {'P@10':>6} {'P@30':>6} {'nDCG@10':>8} {'nDCG@50':>8} {'MAP':>6}")
    for v in args.variants:
        m = pl.evaluate(cfg, v)
        print(f"{m['model_name']:8} {m['prec_at']['10']:6.3f} {m['prec_at']['30']:6.3f} "
              f"{m['ndcg_at']['10']:8.3f} {m['ndcg_at']['50']:8.3f} {m['map']:6.3f}")


if __name__ == "__main__":
    main()
