"""
Full scale benchmark: 200 genes, 100 samples per view, 100 seeds and 50 penalties per method.
Selected with --full_scale.
"""
appConfigDefaults = {
    # AppConfig defaults
}

synthArgsDefaults = {
    "p": 200,
    "n": 100,
    "k": 50,
    "views": 2,
    "nu": 3.0,
}

benchArgsDefaults = {
    "seeds": 100,
    "grid_count": 50,
}
