"""
Desk scale benchmark: 50 genes, 60 samples per view split 30:30 into signal and noise
columns, two views, t columns with 3 degrees of freedom. Runs on a laptop in minutes.
"""
appConfigDefaults = {
    # AppConfig defaults
}

synthArgsDefaults = {
    "p": 50,
    "n": 60,
    "k": 30,
    "views": 2,
    "nu": 3.0,
}

benchArgsDefaults = {
    "seeds": 20,
    "grid_count": 15,
}
