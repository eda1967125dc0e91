"""Fixed-point iterations for families of strict pseudocontractions in l_p spaces."""
