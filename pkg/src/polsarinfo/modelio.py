"""Plain-text classifier model files.

Every float is written with ``repr`` so a read returns bit-identical values.
Layout (one record per line, whitespace separated)::

    polsarinfo-model 1
    classifier ml|svm
    class <id> <name>                 (one per class, ascending id)

    # ml, per class in the same order
    prior <p>
    ridge <eps>
    mean <9 floats>
    cov <81 floats, row-major>

    # svm
    gamma <g>
    C <c>
    scale_mean <9 floats>
    scale_sd <9 floats>
    pair <a> <b> <bias> <n_sv>
    sv <coef> <9 floats>              (n_sv lines after each pair)
"""
from pathlib import Path

import numpy as np

from .classifiers import GaussianModel, SvmBinaryModel, SvmMulticlassModel
from .fileio import FormatError
from .raster import N_FEATURES

MAGIC = "polsarinfo-model 1"


def _f(x):
    return repr(float(x))


def _floats(values):
    return " ".join(_f(v) for v in np.ravel(values))


def format_model(model):
    lines = [MAGIC, f"classifier {model.kind}"]
    lines += [f"class {c} {n}" for c, n in zip(model.class_ids, model.class_names)]
    if model.kind == "ml":
        for k in range(len(model.class_ids)):
            lines.append(f"prior {_f(model.priors[k])}")
            lines.append(f"ridge {_f(model.ridges[k])}")
            lines.append("mean " + _floats(model.means[k]))
            lines.append("cov " + _floats(model.covariances[k]))
    else:
        first = model.pairs[0][1]
        lines.append(f"gamma {_f(first.gamma)}")
        lines.append(f"C {_f(first.C)}")
        lines.append("scale_mean " + _floats(model.mean))
        lines.append("scale_sd " + _floats(model.scale))
        for (a, b), m in model.pairs:
            lines.append(f"pair {a} {b} {_f(m.bias)} {m.coef.size}")
            for coef, sv in zip(m.coef, m.support_vectors):
                lines.append(f"sv {_f(coef)} " + _floats(sv))
    return "\n".join(lines) + "\n"


def save_model(model, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_model(model))


def _vec(parts, n, what, source, lineno):
    if len(parts) != n:
        raise FormatError(f"line {lineno}: '{what}' needs {n} values, got {len(parts)}", source)
    return np.array([float(v) for v in parts])


def parse_model(text, source="<model>"):
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not lines or " ".join(lines[0][1]) != MAGIC:
        raise FormatError(f"missing header {MAGIC!r}", source, offset=0)
    it = iter(lines[1:])

    def take(key):
        try:
            lineno, parts = next(it)
        except StopIteration:
            raise FormatError(f"unexpected end of file, expected {key!r}", source) from None
        if parts[0] != key:
            raise FormatError(f"line {lineno}: expected {key!r}, got {parts[0]!r}", source)
        return lineno, parts[1:]

    _, kind = take("classifier")
    kind = kind[0] if kind else ""
    rest = list(it)
    ids, names = [], []
    while rest and rest[0][1][0] == "class":
        lineno, parts = rest.pop(0)
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 'class <id> <name>'", source)
        ids.append(int(parts[1]))
        names.append(parts[2])
    it = iter(rest)
    p = N_FEATURES
    try:
        if kind == "ml":
            priors, ridges, means, covs = [], [], [], []
            for _ in ids:
                priors.append(float(take("prior")[1][0]))
                ridges.append(float(take("ridge")[1][0]))
                ln, v = take("mean")
                means.append(_vec(v, p, "mean", source, ln))
                ln, v = take("cov")
                covs.append(_vec(v, p * p, "cov", source, ln).reshape(p, p))
            model = GaussianModel(tuple(ids), tuple(names), np.array(means), np.array(covs),
                                  np.array(priors), np.array(ridges))
        elif kind == "svm":
            gamma = float(take("gamma")[1][0])
            C = float(take("C")[1][0])
            ln, v = take("scale_mean")
            mean = _vec(v, p, "scale_mean", source, ln)
            ln, v = take("scale_sd")
            scale = _vec(v, p, "scale_sd", source, ln)
            pairs = []
            for _ in range(len(ids) * (len(ids) - 1) // 2):
                ln, v = take("pair")
                if len(v) != 4:
                    raise FormatError(f"line {ln}: expected 'pair <a> <b> <bias> <n_sv>'", source)
                a, b, bias, nsv = int(v[0]), int(v[1]), float(v[2]), int(v[3])
                coef = np.empty(nsv)
                svs = np.empty((nsv, p))
                for s in range(nsv):
                    ln, v = take("sv")
                    row = _vec(v, p + 1, "sv", source, ln)
                    coef[s] = row[0]
                    svs[s] = row[1:]
                pairs.append(((a, b), SvmBinaryModel(svs, coef, bias, gamma, C, labels=(a, b))))
            model = SvmMulticlassModel(tuple(ids), tuple(names), mean, scale, tuple(pairs))
        else:
            raise FormatError(f"unknown classifier {kind!r}", source)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc), source) from None
    leftover = next(it, None)
    if leftover is not None:
        raise FormatError(f"line {leftover[0]}: trailing content", source)
    return model


def load_model(path):
    path = Path(path)
    return parse_model(path.read_text(), source=path)
