"""
Desk scale benchmark with five views, for comparing against the two view preset.
"""
appConfigDefaults = {
    # AppConfig defaults
}

synthArgsDefaults = {
    "p": 50,
    "n": 60,
    "k": 30,
    "views": 5,
    "nu": 3.0,
}

benchArgsDefaults = {
    "seeds": 20,
    "grid_count": 15,
}
