"""
Adversarial sequence crafting: fast gradient sign, the categorical word-swap
attack on the review classifier, and the Jacobian-guided step-targeting
attack on the sequential RNN. Every attack is a pure function of
(model, input, config); none mutates the model.
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional

import numpy as np

from advseq.sdk.exceptions import ConfigurationError, UnsupportedInputError
from advseq.sdk.logs import get_logger
from advseq.sdk.progress import start_progress_bar
from advseq.sdk.resources.base_models import (AttackOutcome, FgsmConfig,
                                              SequentialAttackConfig,
                                              SequentialTarget, SwapDecision,
                                              WordSwapConfig)
from advseq.sdk.resources.data import EmbeddingDictionary
from advseq.sdk.resources.diff import (classifier_embedding_jacobian,
                                       cost_input_gradient, resolve_loss,
                                       rnn_jacobian)
from advseq.sdk.resources.models import (OOV_TOKEN, LstmClassifierParams,
                                         VanillaRnnParams, as_sequence,
                                         as_tokens, class_of_logits,
                                         lstm_classify, lstm_forward_embedded,
                                         rnn_forward)


logger = get_logger(__name__)


def _changed_steps(original: np.ndarray, adversarial: np.ndarray) -> List[int]:
    return [int(i) for i in np.flatnonzero(np.any(original != adversarial, axis=-1))]


def fgsm(model, x, y_true, loss, cfg: Optional[FgsmConfig] = None) -> AttackOutcome:
    """
    One-shot fast gradient sign perturbation x + epsilon * sign(grad_x cost).

    Args:
        model: VanillaRnnParams on a (t, in) sequence, or LstmClassifierParams
            on an embedded (t, embed_dim) sequence.
        x: continuous input.
        y_true: target output sequence, or class label for the classifier.
        loss: loss object or LossKind.
        cfg: FgsmConfig.

    Raises:
        UnsupportedInputError: for token ids.

    Returns:
        AttackOutcome. success means a class flip for the classifier and a
        strictly larger loss for the sequential model.
    """
    cfg = cfg or FgsmConfig()
    if np.issubdtype(np.asarray(x).dtype, np.integer):
        raise UnsupportedInputError("FGSM needs a continuous input; embed token sequences first")
    loss = resolve_loss(loss)
    x = np.asarray(x, dtype=np.float64)
    grad = cost_input_gradient(model, x, y_true, loss)
    adversarial = x + cfg.epsilon * np.sign(grad)
    norm = cfg.epsilon if np.any(grad != 0) else 0.0

    outcome = {
        "original": x,
        "adversarial": adversarial,
        "changed_positions": _changed_steps(x, adversarial),
        "perturbation_norm": norm,
        "iterations": 1,
    }
    if isinstance(model, LstmClassifierParams):
        before = class_of_logits(lstm_forward_embedded(model, x).logits)
        after = class_of_logits(lstm_forward_embedded(model, adversarial).logits)
        return AttackOutcome(**outcome, success=before != after, original_class=before, adversarial_class=after)

    before, after = rnn_forward(model, x).outputs, rnn_forward(model, adversarial).outputs
    return AttackOutcome(
        **outcome,
        success=loss.value(after, y_true) > loss.value(before, y_true),
        output_delta=after - before,
    )


def _check_dictionary(model: LstmClassifierParams, dictionary: EmbeddingDictionary) -> None:
    if dictionary.vocab_size != model.vocab_size:
        raise ConfigurationError(
            f"Dictionary has {dictionary.vocab_size} words but the model embeds {model.vocab_size}"
        )


def sign_match_candidate(model: LstmClassifierParams, token: int, direction: np.ndarray) -> Optional[int]:
    """
    Dictionary word whose embedding offset from `token` best matches a sign pattern.

    Minimizes ||sgn(z - x) - direction||_1 over every word except the reserved
    id 0 and `token` itself; ties go to the lowest id.

    Returns:
        The chosen id, or None when the dictionary has no candidate.
    """
    candidates = np.array([i for i in range(model.vocab_size) if i not in (OOV_TOKEN, token)], dtype=np.int64)
    if candidates.size == 0:
        return None
    offsets = np.sign(model.embedding[candidates] - model.embedding[token])
    distances = np.abs(offsets - direction).sum(axis=1)
    return int(candidates[np.argmin(distances)])


def craft_word_swap(
    model: LstmClassifierParams,
    s,
    dictionary: EmbeddingDictionary,
    cfg: Optional[WordSwapConfig] = None,
) -> AttackOutcome:
    """
    Replace words one at a time until the predicted class flips.

    Positions are visited by descending L1 saliency of the current class's
    embedding-Jacobian column (ties to the lowest index), recomputed on the
    current adversarial sentence after every swap. The replacement direction
    is -sgn(J[i, current class]): it seeks to lower the current-class logit.

    Raises:
        ConfigurationError: when the dictionary does not match the model.
        InputError: on an empty or out-of-range token sequence.

    Returns:
        AttackOutcome with perturbation_norm = number of changed words and one
        SwapDecision per replacement.
    """
    cfg = cfg or WordSwapConfig()
    _check_dictionary(model, dictionary)
    original = as_tokens(s, model.vocab_size)
    tokens = original.copy()
    original_class = class_of_logits(lstm_classify(model, tokens).logits)
    budget = cfg.budget(len(tokens))

    visited = np.zeros(len(tokens), dtype=bool)
    changed, decisions = [], []
    current_class = original_class
    while len(changed) < budget and not visited.all():
        logits = lstm_classify(model, tokens).logits
        current_class = class_of_logits(logits)
        if current_class != original_class:
            break
        jacobian = classifier_embedding_jacobian(model, tokens)
        saliency = np.where(visited, -np.inf, jacobian.saliency(current_class))
        position = int(np.argmax(saliency))
        visited[position] = True

        direction = -np.sign(jacobian.column(current_class)[position])
        replacement = sign_match_candidate(model, int(tokens[position]), direction)
        if replacement is None:
            continue
        old_token = int(tokens[position])
        tokens[position] = replacement
        decisions.append(SwapDecision(
            position=position,
            old_token=old_token,
            new_token=replacement,
            current_class=current_class,
            logit_before=float(logits[current_class]),
            logit_after=float(lstm_classify(model, tokens).logits[current_class]),
        ))
        changed.append(position)

    adversarial_class = class_of_logits(lstm_classify(model, tokens).logits)
    return AttackOutcome(
        original=original,
        adversarial=tokens,
        success=adversarial_class != original_class,
        changed_positions=changed,
        perturbation_norm=float(len(changed)),
        iterations=len(decisions),
        original_class=original_class,
        adversarial_class=adversarial_class,
        decisions=decisions,
    )


def swap_oracle(model: LstmClassifierParams, tokens, position: int, dictionary: EmbeddingDictionary, cls: int) -> np.ndarray:
    """
    Brute force: every word id (except 0 and the current one) that lowers
    logit `cls` when placed at `position`.
    """
    _check_dictionary(model, dictionary)
    tokens = as_tokens(tokens, model.vocab_size).copy()
    current = int(tokens[position])
    baseline = lstm_classify(model, tokens).logits[cls]
    reducing = []
    for candidate in range(1, model.vocab_size):
        if candidate == current:
            continue
        tokens[position] = candidate
        if lstm_classify(model, tokens).logits[cls] < baseline:
            reducing.append(candidate)
    return np.array(reducing, dtype=np.int64)


def audit_swap_decisions(outcomes: Iterable[AttackOutcome]) -> dict:
    """
    How often the sign-matching pick lowered the current-class logit.
    Every decision that did not is logged at WARNING.
    """
    total = reduced = 0
    for index, outcome in enumerate(outcomes):
        for decision in outcome.decisions:
            total += 1
            if decision.reduced:
                reduced += 1
                continue
            logger.warning(
                f"input {index}: swap {decision.old_token}->{decision.new_token} at position "
                f"{decision.position} raised class-{decision.current_class} logit "
                f"{decision.logit_before:.6g} -> {decision.logit_after:.6g}"
            )
    return {
        "decisions": total,
        "reduced": reduced,
        "reduction_rate": reduced / total if total else None,
    }


def _target_met(target: SequentialTarget, outputs: np.ndarray, reference: np.ndarray, delta: float) -> bool:
    value = outputs[target.step, target.coord]
    if target.value is not None:
        return abs(value - target.value) < delta
    return (value - reference[target.step, target.coord]) * target.direction >= delta


def selectivity_scores(blocks: np.ndarray, step: int, coord: int, kappa: float) -> np.ndarray:
    """
    |J[i, step, coord, a]| / (max over every other output step k and coordinate of |J[i, k, :, a]| + kappa),
    for every input step i and input coordinate a.
    """
    magnitude = np.abs(blocks)
    on_target = magnitude[:, step, coord, :]
    others = np.delete(magnitude, step, axis=1)
    off_target = others.max(axis=(1, 2)) if others.shape[1] else np.zeros_like(on_target)
    return on_target / (off_target + kappa)


def craft_sequential(model: VanillaRnnParams, x, cfg: SequentialAttackConfig) -> AttackOutcome:
    """
    Move chosen output components while leaving the others largely alone.

    Each iteration recomputes the exact Jacobian, keeps the input coordinates
    whose influence on a still-unmet target is at least off_target_ratio times
    their largest influence on any other output step, and moves each by
    step_size in the direction that pushes the target the right way.

    Raises:
        ConfigurationError: when a target lies outside the output sequence.

    Returns:
        AttackOutcome with the infinity-norm of the perturbation; when no
        coordinate is selective enough the outcome fails with a diagnostic.
    """
    x = as_sequence(x, model.input_dim, "craft_sequential")
    if x.ndim != 2:
        raise ConfigurationError("craft_sequential attacks one (t, input_dim) sequence at a time")
    steps = x.shape[0]
    for target in cfg.targets:
        if target.step >= steps or target.coord >= model.output_dim:
            raise ConfigurationError(
                f"Target (step {target.step}, coord {target.coord}) outside a {steps}x{model.output_dim} output"
            )

    reference = rnn_forward(model, x).outputs
    adversarial = x.copy()
    outputs = reference
    diagnostic = None
    iterations = 0
    while iterations < cfg.max_iters:
        pending = [t for t in cfg.targets if not _target_met(t, outputs, reference, cfg.delta)]
        if not pending:
            break
        blocks = rnn_jacobian(model, adversarial).blocks
        update = np.zeros_like(adversarial)
        for target in pending:
            selected = selectivity_scores(blocks, target.step, target.coord, cfg.kappa) >= cfg.off_target_ratio
            if not selected.any():
                continue
            if target.value is not None:
                wanted = np.sign(target.value - outputs[target.step, target.coord])
            else:
                wanted = target.direction
            signs = np.sign(blocks[:, target.step, target.coord, :]) * wanted
            update += np.where(selected, cfg.step_size * signs, 0.0)
        if not update.any():
            diagnostic = (
                f"No input coordinate reaches off_target_ratio={cfg.off_target_ratio} for targets "
                + ", ".join(f"(step {t.step}, coord {t.coord})" for t in pending)
            )
            logger.info(diagnostic)
            break
        adversarial = adversarial + update
        outputs = rnn_forward(model, adversarial).outputs
        iterations += 1

    success = all(_target_met(t, outputs, reference, cfg.delta) for t in cfg.targets)
    if not success and diagnostic is None:
        diagnostic = f"Targets unmet after {iterations} iterations"
    return AttackOutcome(
        original=x,
        adversarial=adversarial,
        success=success,
        changed_positions=_changed_steps(x, adversarial),
        perturbation_norm=float(np.max(np.abs(adversarial - x))),
        iterations=iterations,
        output_delta=outputs - reference,
        diagnostic=diagnostic,
    )


def attack_many(fn: Callable, items: List, jobs: int = 1) -> List[AttackOutcome]:
    """
    Run an attack over many inputs, in order.

    Args:
        fn: picklable single-argument callable (e.g. a functools.partial of an attack).
        items: attack inputs.
        jobs: worker processes; 1 runs in-process.
    """
    progress = start_progress_bar(len(items), "Attacking", unit="input")
    try:
        if jobs <= 1:
            results = []
            for item in items:
                results.append(fn(item))
                progress.update()
            return results
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = []
            for result in executor.map(fn, items):
                results.append(result)
                progress.update()
            return results
    finally:
        progress.close()


SUMMARY_COLUMNS = [
    "input", "success", "changed_positions", "perturbation_norm", "iterations",
    "original_class", "adversarial_class",
]


def summary_rows(outcomes: List[AttackOutcome]) -> List[list]:
    """ One CSV row per outcome plus a trailing `mean` row. """
    rows = [
        [index, int(o.success), len(o.changed_positions), o.perturbation_norm, o.iterations,
         "" if o.original_class is None else o.original_class,
         "" if o.adversarial_class is None else o.adversarial_class]
        for index, o in enumerate(outcomes)
    ]
    if outcomes:
        columns = np.array([row[1:5] for row in rows], dtype=np.float64).mean(axis=0)
        rows.append(["mean", *[repr(float(value)) for value in columns], "", ""])
    return rows


def summarize(outcomes: List[AttackOutcome], categorical: bool = False) -> dict:
    """ Aggregate success rate, perturbation size and iteration count. """
    n = len(outcomes)
    summary = {
        "n": n,
        "success_rate": float(np.mean([o.success for o in outcomes])) if n else 0.0,
        "mean_iterations": float(np.mean([o.iterations for o in outcomes])) if n else 0.0,
    }
    if categorical:
        summary["mean_changed_words"] = float(np.mean([len(o.changed_positions) for o in outcomes])) if n else 0.0
        summary["mean_changed_fraction"] = (
            float(np.mean([len(o.changed_positions) / len(o.original) for o in outcomes])) if n else 0.0
        )
    else:
        summary["mean_perturbation_norm"] = float(np.mean([o.perturbation_norm for o in outcomes])) if n else 0.0
    return summary


