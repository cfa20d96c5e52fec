"""Estimate human color-concept association ratings from image corpora.

The pipeline: scan an image corpus, normalize images to 100x100 CIELAB
grids, evaluate a catalog of color features (balls, cylindrical sectors,
basic-color-term categories, each over six spatial windows), select features
by a lasso sweep with leave-one-concept-out cross-validation, fit weights by
ordinary least squares, and score estimates against human rating tables.
"""

from .color import (D65, LabColor, LchColor, Rgb8, WhitePoint, XyY,
                    delta_e_76, hue_delta, lab_to_lch, lab_to_srgb,
                    lch_to_lab, srgb_to_lab, xyy_to_lab)
from .datasets import (ColorTable, ConceptSet, RatingsTable, builtin_bcp37,
                       builtin_fruit_ratings, builtin_uw58, load_color_table,
                       load_ratings, save_ratings)
from .corpus import (CorpusManifest, ImageRecord, LocalDirectoryFetcher,
                     fetch, load_manifest, scan_corpus)
from .imaging import (NormalizedImage, WindowMask, center_window,
                      normalize_image, segment_figure)
from .categories import (CategoryModel, categorize, categorize_image,
                         default_category_model, load_category_model)
from .features import (DesignMatrix, FeatureCatalog, FeatureSpec,
                       build_design_matrix, catalog, eval_ball, eval_category,
                       eval_sector, feature_id, load_design_matrix,
                       parse_feature_id)
from .modeling import (CvCurve, LassoFit, ModelSpec, estimate, lasso_fit,
                       lasso_path, lambda_max, load_model, loo_cv_curve,
                       ols_fit, select_features, train_model)
from .evaluation import (EvaluationReport, EstimateMatrix, evaluate_model,
                         fisher_z_independent, load_estimates, pearson_r)

__version__ = "0.1.0"
