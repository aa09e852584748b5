"""Independent brute-force oracles for the statistical operations.

These deliberately avoid the library's own code paths: plain loops over
pooled values and dictionaries, with p-values delegated to scipy. They are
slow and simple on purpose; tests compare the fast implementations against
them on randomized inputs.
"""

from __future__ import annotations

import math

from scipy.stats import chi2 as scipy_chi2


def alpha_bruteforce(items: list[list[str]]) -> float:
    """Krippendorff's alpha (nominal) from first principles.

    items: per-item label lists; items with fewer than 2 labels are dropped.
    D_o averages within-item disagreement shares; D_e counts disagreeing
    ordered pairs over the pooled label multiset.
    """
    kept = [labels for labels in items if len(labels) >= 2]
    pooled = [label for labels in kept for label in labels]
    n = len(pooled)
    if len(kept) < 2 or n < 2:
        raise ValueError("alpha undefined")

    observed_numerator = 0.0
    for labels in kept:
        m = len(labels)
        disagreeing = sum(1 for i in range(m) for j in range(m)
                          if i != j and labels[i] != labels[j])
        observed_numerator += disagreeing / (m - 1)
    d_observed = observed_numerator / n

    expected_pairs = sum(1 for i in range(n) for j in range(n)
                         if i != j and pooled[i] != pooled[j])
    d_expected = expected_pairs / (n * (n - 1))
    if d_expected == 0:
        raise ValueError("alpha undefined: zero expected disagreement")
    return 1.0 - d_observed / d_expected


def chi_square_bruteforce(counts: list[list[int]]) -> dict:
    """Chi-square statistic, dof, p-value (scipy), and adjusted residuals."""
    rows = len(counts)
    cols = len(counts[0])
    n = sum(sum(row) for row in counts)
    row_totals = [sum(row) for row in counts]
    col_totals = [sum(counts[i][j] for i in range(rows)) for j in range(cols)]

    statistic = 0.0
    residuals = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            expected = row_totals[i] * col_totals[j] / n
            if expected > 0:
                statistic += (counts[i][j] - expected) ** 2 / expected
                denominator = expected * (1 - row_totals[i] / n) * (1 - col_totals[j] / n)
                if denominator > 0:
                    residuals[i][j] = (counts[i][j] - expected) / math.sqrt(denominator)
    dof = (rows - 1) * (cols - 1)
    return {
        "statistic": statistic,
        "dof": dof,
        "p_value": float(scipy_chi2.sf(statistic, dof)),
        "residuals": residuals,
    }


def classification_report_bruteforce(predictions: dict[str, str],
                                     gold: dict[str, str],
                                     labels: list[str]) -> dict:
    """Per-class P/R/F1/support and macro F1 via plain counting."""
    per_class = {}
    f1_values = []
    for label in labels:
        tp = sum(1 for item, g in gold.items() if g == label and predictions[item] == label)
        fp = sum(1 for item, g in gold.items() if g != label and predictions[item] == label)
        fn = sum(1 for item, g in gold.items() if g == label and predictions[item] != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = {"precision": precision, "recall": recall, "f1": f1,
                            "support": tp + fn}
        f1_values.append(f1)
    correct = sum(1 for item, g in gold.items() if predictions[item] == g)
    return {
        "per_class": per_class,
        "macro_f1": sum(f1_values) / len(labels),
        "accuracy": correct / len(gold) if gold else 0.0,
    }


def cosine_bruteforce(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))
