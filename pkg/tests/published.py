"""Published pooled accuracy (percent) and n per task type and condition.

Counts are reconstructed as round(accuracy * n).
"""
from constraint_eval.scoring import ScoredTrial

CONDITIONS = ("control", "e_prime", "no_have", "elaborated_prompt", "neutral_ban")

PUBLISHED = {
    "analogical": ((79.7, 429), (73.2, 209), (79.2, 447), (75.2, 419), (80.4, 419)),
    "causal": ((75.3, 300), (80.0, 145), (80.0, 255), (85.3, 273), (83.9, 261)),
    "classification": ((91.5, 445), (96.2, 396), (98.1, 432), (92.0, 437), (99.1, 441)),
    "epistemic": ((64.7, 428), (74.5, 208), (72.4, 369), (83.2, 394), (77.1, 262)),
    "ethical": ((75.3, 308), (88.7, 141), (93.5, 275), (86.4, 301), (90.3, 238)),
    "math": ((92.3, 428), (91.7, 300), (94.3, 422), (89.9, 424), (92.0, 438)),
    "syllogisms": ((98.5, 402), (97.1, 70), (98.5, 401), (97.8, 401), (98.0, 401)),
}


def counts(task: str, condition: str) -> tuple[int, int]:
    acc, n = PUBLISHED[task][CONDITIONS.index(condition)]
    return round(acc / 100 * n), n


def published_trials() -> list[ScoredTrial]:
    """One scored first-pass trial per published observation."""
    out = []
    for task in PUBLISHED:
        for cond in CONDITIONS:
            k, n = counts(task, cond)
            for i in range(n):
                out.append(ScoredTrial.from_dict({
                    "trial_id": f"pub:{cond}:{task}:{i}", "item_id": f"{task}-{i % 20}",
                    "model_id": "pub", "condition": cond, "trial_index": i, "temperature": 0.0,
                    "sequence": i, "attempt": 0, "task_type": task, "ground_truth": "A",
                    "extracted": "A" if i < k else "B", "rule": "mc.bold_letter",
                    "violations": 0, "compliance_rate": 1.0, "tier": "full", "word_count": 1,
                }))
    return out
