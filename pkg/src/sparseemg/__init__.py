"""SparseEMG: electrode-layout optimization for EMG gesture recognition.

Given a multi-channel EMG gesture dataset, the engine ranks electrodes by
informativeness (mutual information, permutation importance or RMS
importance), sweeps layout sizes under stratified 4-fold cross-validation,
and picks the electrode count minimizing the Sparsity Score
w1*(100 - accuracy) + w2*E. The chosen layout can be rendered as a
physically scaled placement stencil, and a WebSocket service plus CLI wrap
the engine for interactive and batch use.
"""

from .classifiers import (
    ClassifierSpec,
    GaussianNaiveBayes,
    KNeighborsClassifier,
    RandomForestClassifier,
    SoftmaxRegression,
    TrainedModel,
    load_model,
    predict,
    save_model,
    train,
)
from .dataset import (
    DatasetManifest,
    ElectrodeSite,
    GestureDef,
    SyntheticSpec,
    TrialRecord,
    generate_synthetic,
    load_manifest,
    load_trials,
    save_manifest,
    write_dataset,
)
from .evaluation import ConfusionMatrix, FoldPlan, evaluate_cv, make_stratified_folds
from .features import (
    FeatureMatrix,
    Standardizer,
    build_feature_matrix,
    extract_trial_features,
    rms_window,
)
from .selection import (
    ElectrodeRanking,
    rank_electrodes,
    rank_mutual_information,
    rank_permutation_importance,
    rank_rms_importance,
)
from .stencil import ArmMeasurements, generate_electrode_map, generate_stencil
from .sweep import (
    SparsityConfig,
    SweepCancelled,
    SweepPoint,
    SweepResult,
    band_layout,
    compare_band_vs_sparse,
    cross_user_eval,
    run_sweep,
    select_optimal,
    sparsity_score,
)
from .validation import NotFittedError, ValidationError

__version__ = "0.1.0"
