"""Walk through the precision/recall machinery on transparent inputs.

A predicted blur map is scored against binary ground truth by sweeping a
fixed grid of thresholds; a pixel counts as predicted-blurry at threshold t
when its confidence is >= t. Precision, recall and F aggregate over the
whole dataset (ODS picks one threshold for the corpus, OIS the best per
image, AP integrates the interpolated curve at 101 recall levels).

Each section prints a small situation where the right answer is obvious,
then the conventions that make degenerate images well-defined.
"""

import numpy as np

from blurlab import evaluation


def show(title, maps, gts, n_thresholds=11):
    rep, curve = evaluation.evaluate(maps, gts, n_thresholds)
    print(f"--- {title} ---")
    print("  t      tp  fp  fn   P      R      F")
    for row in zip(curve.thresholds, curve.tp, curve.fp, curve.fn,
                   curve.precision, curve.recall, curve.f_score):
        print(f"  {row[0]:.2f} {row[1]:4d} {row[2]:3d} {row[3]:3d}"
              f"   {row[4]:.3f}  {row[5]:.3f}  {row[6]:.3f}")
    print(f"  ODS {rep.ods_f:.3f} at t={rep.ods_threshold:.2f};"
          f" OIS {rep.ois_f:.3f}; AP {rep.ap:.3f}\n")


def main():
    gt = np.array([[0, 0, 1, 1]] * 4, dtype=np.uint8)

    print("=== a perfect predictor ===")
    show("map equals ground truth", [gt.astype(float)], [gt])

    print("=== a confident but wrong predictor ===")
    show("map equals 1 - ground truth", [1.0 - gt], [gt])
    print("every interior threshold predicts exactly the wrong pixels, so")
    print("the best the curve offers is predicting everything at t=0.\n")

    print("=== a hedging predictor ===")
    hedge = np.where(gt > 0, 0.6, 0.4)
    show("correct ordering, weak margins", [hedge], [gt])

    print("=== degenerate conventions ===")
    empty_gt = np.zeros((4, 4), dtype=np.uint8)
    rep, _ = evaluation.evaluate([np.zeros((4, 4))], [empty_gt], 11)
    print(f"nothing to find, nothing predicted: OIS {rep.ois_f:.1f} (credit)")
    rep, _ = evaluation.evaluate([np.ones((4, 4))], [empty_gt], 11)
    print(f"nothing to find, everything predicted: OIS {rep.ois_f:.1f} (no credit)")

    print("\n=== threshold count only refines the grid ===")
    rng = np.random.default_rng(0)
    maps = [rng.uniform(size=(16, 16)) for _ in range(4)]
    gts = [(rng.uniform(size=(16, 16)) < 0.4).astype(np.uint8) for _ in range(4)]
    for n in (26, 101, 256):
        rep, _ = evaluation.evaluate(maps, gts, n)
        print(f"  {n:3d} thresholds: ODS {rep.ods_f:.4f}  OIS {rep.ois_f:.4f}  AP {rep.ap:.4f}")


if __name__ == "__main__":
    main()
