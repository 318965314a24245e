"""Post-processing, metrics, fusion, training and the leave-one-subject-out harness."""
