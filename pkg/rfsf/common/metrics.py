import dataclasses
from typing import List, Optional

import numpy as np
from jax import lax
from sklearn.metrics import confusion_matrix as _sk_confusion_matrix

__all__ = ['AverageMeter', 'acc_top1', 'confusion_matrix', 'metrics', 'MetricsReport']


@dataclasses.dataclass
class AverageMeter:
    """Bag-weighted running mean of one per-batch training metric"""
    total: float = 0.
    count: int = 0
    last: float = 0.

    def update(self, val, n=1):
        self.last = float(val)
        self.total += self.last * n
        self.count += n

    @property
    def avg(self):
        return self.total / self.count if self.count else 0.


def acc_top1(logits, labels):
    top = lax.top_k(logits, 1)[1][:, 0]
    return (top == labels).mean()


def confusion_matrix(preds, labels, num_classes):
    """K x K counts, rows = true class, columns = predicted class."""
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if preds.shape != labels.shape:
        raise ValueError(f'preds ({preds.shape[0]}) and labels ({labels.shape[0]}) differ in length')
    for name, x in (('pred', preds), ('label', labels)):
        if x.size and (x.min() < 0 or x.max() >= num_classes):
            raise IndexError(f'{name} entry out of range [0, {num_classes})')
    if not labels.size:
        return np.zeros((num_classes, num_classes), dtype=np.int64)
    return _sk_confusion_matrix(labels, preds, labels=np.arange(num_classes)).astype(np.int64)


@dataclasses.dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    precision: List[float]
    recall: List[float]
    f1: List[float]
    confusion: np.ndarray
    head: str = ''
    class_names: Optional[List[str]] = None
    seconds_per_bag: Optional[float] = None

    @property
    def num_classes(self):
        return self.confusion.shape[0]

    @property
    def total(self):
        return int(self.confusion.sum())

    def to_dict(self, timing=True):
        d = dict(
            head=self.head,
            accuracy=self.accuracy,
            macro_f1=self.macro_f1,
            total=self.total,
            per_class=[
                dict(index=i, name=self._name(i), precision=p, recall=r, f1=f, support=int(s))
                for i, (p, r, f, s) in enumerate(
                    zip(self.precision, self.recall, self.f1, self.confusion.sum(axis=1)))],
            confusion=self.confusion.tolist(),
        )
        if timing and self.seconds_per_bag is not None:
            d['seconds_per_bag'] = self.seconds_per_bag
        return d

    def _name(self, i):
        if self.class_names is not None and i < len(self.class_names):
            return self.class_names[i]
        return str(i)


def _safe_div(num, den):
    num = num.astype(np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def metrics(cm, head='', class_names=None):
    """Accuracy, per-class precision / recall / F1 and macro F1 from a confusion matrix.

    Empty denominators count as 0, and classes with no F1 still enter the macro average.
    """
    cm = np.asarray(cm, dtype=np.int64)
    tp = np.diag(cm)
    total = cm.sum()
    accuracy = float(tp.sum() / total) if total else 0.
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return MetricsReport(
        accuracy=accuracy,
        macro_f1=float(f1.mean()) if f1.size else 0.,
        precision=precision.tolist(),
        recall=recall.tolist(),
        f1=f1.tolist(),
        confusion=cm,
        head=head,
        class_names=list(class_names) if class_names is not None else None,
    )
