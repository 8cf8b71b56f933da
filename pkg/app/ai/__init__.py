"""Learning and evaluation: PCA, subset selection, voters, ensemble, random forest, metrics."""
