# %% [markdown]
"""
Six linear classifiers on one split
===================================

Train every classifier on 75% of a planted-signal corpus and score the rest.
All of them produce a hyperplane; only the way the weights are estimated
differs.
"""

# %%
import numpy as np

from lintext.classifiers import ClassifierKind, train_path
from lintext.evaluation import evaluate
from lintext.harness import ExperimentSpec
from lintext.pipeline import fit_from_documents, transform_documents
from lintext.corpus import tokenize
from lintext.synthetic import generate

corpus = generate(n_docs=400, vocab_size=1500, n_planted=20, seed=2)
docs = [tokenize(d) for d in corpus.documents]
train, test = docs[:300], docs[300:]

# %%
params = {
    ClassifierKind.VTT: {"lambda_quantile": 0.5, "beta": []},
    ClassifierKind.SVM: {"C": 0.1},
    ClassifierKind.LOGREG: {"C": 1.0},
    ClassifierKind.NAIVE_BAYES: {"alpha": 1.0},
    ClassifierKind.LDA: {"shrinkage": 0.5},
    ClassifierKind.DLDA: {"shrinkage": 0.5},
}
for kind, p in params.items():
    spec = ExperimentSpec(kind)
    fitted, design = fit_from_documents(spec.pipeline_config(), train)
    (model,) = train_path(kind, design.X, design.y, [p])
    held = transform_documents(fitted, test)
    scores = model.decision_function(held.X)
    m = evaluate(held.y, scores)
    print(f"{kind.value:6s} dims={design.X.shape[1]:5d}  f1={m['f1']:.3f} mcc={m['mcc']:.3f} iauc={m['iauc']:.3f}")

# %% [markdown]
"""
Full LDA sees more columns than training rows, so the pipeline first projects
onto the leading principal components.  The VTT angles of planted words sit
near the top of the range; background words scatter around zero, but rare ones
can reach the extremes too.
"""

# %%
fitted, design = fit_from_documents(ExperimentSpec("vtt").pipeline_config(), train)
(vtt,) = train_path(ClassifierKind.VTT, design.X, design.y, [params[ClassifierKind.VTT]])
planted = [fitted.vocab.index[w] for w in corpus.planted if w in fitted.vocab.index]
others = np.setdiff1d(np.arange(len(vtt.theta)), planted)
print("planted theta mean", vtt.theta[planted].mean().round(3))
print("background theta mean", vtt.theta[others].mean().round(3), "max |theta|", np.abs(vtt.theta[others]).max().round(3))
