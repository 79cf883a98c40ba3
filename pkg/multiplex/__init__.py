"""
Semi-supervised node classification on multiplex graphs with a learned
generalized-mean aggregation of the layers.
"""
