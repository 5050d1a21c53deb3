"""Reference values for the seven-band experiment (10,000 subjects, 350 features).

Counts and planning-line coefficients as published for ICC bands
0.35-0.95.  Error rates are fractions.
"""

BANDS = (0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95)

EER_TARGETS = (0.05, 0.02, 0.01, 0.005, 0.001)
FRR_TARGET = 0.01
FAR_LEVELS = (0.001, 0.0001, 0.00001, 0.000001)

# band -> (mean ICC, SD of ICC over 350 features)
BAND_ICC = {
    0.35: (0.350, 0.009),
    0.45: (0.450, 0.008),
    0.55: (0.549, 0.007),
    0.65: (0.650, 0.006),
    0.75: (0.750, 0.004),
    0.85: (0.850, 0.003),
    0.95: (0.950, 0.001),
}

# EER target -> features required per band (ordered as BANDS)
REQUIRED_FEATURES = {
    0.05: (82, 48, 30, 19, 13, 8, 5),
    0.02: (127, 74, 46, 30, 20, 12, 7),
    0.01: (162, 94, 59, 38, 25, 16, 8),
    0.005: (198, 115, 72, 46, 30, 19, 10),
    0.001: (281, 166, 102, 66, 43, 27, 14),
}

# EER target -> (F, df, p, R^2, slope, intercept)
EER_FITS = {
    0.05: (3637, 1, 2e-8, 0.999, -1.987, 2.587),
    0.02: (2801, 1, 5e-8, 0.998, -2.042, 2.804),
    0.01: (1036, 1, 5e-7, 0.995, -2.082, 2.930),
    0.005: (1678, 1, 2e-7, 0.997, -2.084, 3.016),
    0.001: (1476, 1, 2e-7, 0.997, -2.093, 3.176),
}

# FAR level (at FRR = 1%) -> (F, df, p, R^2, slope, intercept)
FRR_AT_FAR_FITS = {
    0.001: (1605, 1, 2e-7, 0.997, -2.086, 3.060),
    0.0001: (2089, 1, 9e-8, 0.998, -2.076, 3.150),
    0.00001: (1454, 1, 2e-7, 0.997, -2.091, 3.232),
    0.000001: (871, 1, 8e-6, 0.995, -2.064, 3.279),
}
