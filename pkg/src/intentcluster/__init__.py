"""Unsupervised and semi-supervised intent clustering for short texts.

Contrastive pre-training over a small trainable encoder, centroid-guided
warm-start K-Means with assignment-aligned pseudo-labels, cluster-count
estimation by over-clustering, and clustering metrics (NMI/ARI/ACC).
"""

from .alignment import (AlignmentMap, align_centroids, hungarian_solve,
                        label_change_fraction, remap_labels)
from .clustering import ClusterState, kmeans_pp_init, kmeans_run, mse_objective
from .data import (AugmentedPair, Corpus, Utterance, feature_dropout,
                   load_corpus, make_semi_split, random_erase, save_corpus)
from .encoder import (EncoderParams, ProjectionHead, TokenView, TrainBatch,
                      encode, encode_batch, grad_backprop, init_encoder_params,
                      init_projection_head, load_checkpoint, param_tree,
                      project, save_checkpoint)
from .errors import ConfigError, EmptyCorpusError, ParseError, TrainingError
from .estimation import (ClusterEstimate, estimate_from_sizes, estimate_k_semi,
                         estimate_k_unsup, induce_known_clusters)
from .metrics import ContingencyTable, ari, clustering_accuracy, contingency_table, nmi
from .objectives import (ContrastiveBatch, cross_entropy, semi_contrastive_loss,
                         semi_pretrain_loss, self_supervised_loss,
                         sup_contrastive_loss, two_view_ce_loss,
                         unsup_contrastive_loss)
from .optim import AdamWState, adamw_step
from .pipeline import (IterationRecord, RunConfig, RunReport, encode_corpus,
                       infer, pretrain_semi, pretrain_unsup, run_experiment,
                       train_loop)

__version__ = "0.1.0"
