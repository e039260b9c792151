from .losses import cosine_similarity, contrastive_loss, equation_loss, combined_loss, forward_seed
from .loop import TrainConfig, train_two_stage
