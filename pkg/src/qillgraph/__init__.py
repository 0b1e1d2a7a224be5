"""Typed hypergraph rewriting with proof certificates in quantified linear logic."""
