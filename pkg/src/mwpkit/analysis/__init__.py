from .metrics import (
    accuracy,
    solve_problem,
    solve_corpus,
    answer_matches,
    problem_representations,
    PrototypeCluster,
    prototype_clusters,
    interval_index,
    interval_table,
    interval_accuracy,
    calinski_harabasz,
    layer_similarity_probe,
    export_embeddings,
)
