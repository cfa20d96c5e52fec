"""Embedded color palettes: xyY coordinates with published Lab/Lch values.

Rows are (label, x, y, Y, L, a, b, c, h). The Lab/Lch columns are the
published reference values; converting xyY under each table's white point
reproduces them within 0.05 per channel (0.1 degrees hue).
"""

UW58_WHITE_POINT = (0.3127, 0.3290, 100.0)

UW58_ROWS = (
    ("1", 0.22397, 0.28399, 48.278, 75, -23.657, -26.274, 35.355, 228),
    ("2", 0.2081, 0.21415, 4.4155, 25, 1.3084, -24.966, 25.00, 273),
    ("3", 0.24471, 0.25394, 18.419, 50, 1.3084, -24.966, 25.00, 273),
    ("4", 0.26261, 0.27354, 48.278, 75, 1.3084, -24.966, 25.00, 273),
    ("5", 0.28644, 0.19884, 4.4155, 25, 26.274, -23.657, 35.355, 318),
    ("6", 0.29797, 0.24051, 18.419, 50, 26.274, -23.657, 35.355, 318),
    ("7", 0.30272, 0.2622, 48.278, 75, 26.274, -23.657, 35.355, 318),
    ("8", 0.36941, 0.18108, 4.4155, 25, 51.24, -22.349, 55.902, 336.43),
    ("9", 0.35288, 0.2259, 18.419, 50, 51.24, -22.349, 55.902, 336.43),
    ("10", 0.40795, 0.21059, 18.419, 50, 76.206, -21.041, 79.057, 344.56),
    ("11", 0.18715, 0.19157, 18.419, 50, 2.6168, -49.931, 50.00, 273),
    ("12", 0.19063, 0.1298, 4.4155, 25, 27.583, -48.623, 55.902, 299.57),
    ("13", 0.23146, 0.18448, 18.419, 50, 27.583, -48.623, 55.902, 299.57),
    ("14", 0.25495, 0.12284, 4.4155, 25, 52.548, -47.315, 70.711, 318),
    ("15", 0.27871, 0.17635, 18.419, 50, 52.548, -47.315, 70.711, 318),
    ("16", 0.32783, 0.1674, 18.419, 50, 77.514, -46.006, 90.139, 329.31),
    ("17", 0.17813, 0.14021, 18.419, 50, 28.891, -73.589, 79.057, 291.43),
    ("18", 0.1742, 0.082515, 4.4155, 25, 53.857, -72.28, 90.139, 306.69),
    ("19", 0.21726, 0.13588, 18.419, 50, 53.857, -72.28, 90.139, 306.69),
    ("20", 0.25909, 0.13088, 18.419, 50, 78.822, -70.972, 106.07, 318),
    ("21", 0.25332, 0.35108, 18.419, 50, -24.966, -1.3084, 25.00, 183),
    ("22", 0.26938, 0.34523, 48.278, 75, -24.966, -1.3084, 25.00, 183),
    ("23", 0.31273, 0.32902, 0.00, 0, 0.00, 0.00, 0.00, 0.00),
    ("24", 0.31273, 0.32902, 4.4155, 25, 0.00, 0.00, 0.00, 0.00),
    ("25", 0.31273, 0.32902, 18.419, 50, 0.00, 0.00, 0.00, 0.00),
    ("26", 0.31273, 0.32902, 48.278, 75, 0.00, 0.00, 0.00, 0.00),
    ("27", 0.31273, 0.32902, 100.00, 100, 0.00, 0.00, 0.00, 0.00),
    ("28", 0.41044, 0.2905, 4.4155, 25, 24.966, 1.3084, 25, 3.00),
    ("29", 0.37353, 0.30534, 18.419, 50, 24.966, 1.3084, 25, 3.00),
    ("30", 0.3568, 0.31196, 48.278, 75, 24.966, 1.3084, 25, 3.00),
    ("31", 0.43376, 0.28095, 18.419, 50, 49.931, 2.6168, 50, 3.00),
    ("32", 0.49181, 0.25666, 18.419, 50, 74.897, 3.9252, 75, 3.00),
    ("33", 0.3075, 0.52435, 4.4155, 25, -26.274, 23.657, 35.355, 138.00),
    ("34", 0.31561, 0.44408, 18.419, 50, -26.274, 23.657, 35.355, 138.00),
    ("35", 0.31654, 0.41004, 48.278, 75, -26.274, 23.657, 35.355, 138.00),
    ("36", 0.27022, 0.43268, 48.278, 75, -51.24, 22.349, 55.902, 156.43),
    ("37", 0.41792, 0.44961, 4.4155, 25, -1.3084, 24.966, 25, 93.00),
    ("38", 0.38179, 0.40728, 18.419, 50, -1.3084, 24.966, 25, 93.00),
    ("39", 0.36355, 0.38634, 48.278, 75, -1.3084, 24.966, 25, 93.00),
    ("40", 0.52174, 0.37656, 4.4155, 25, 23.657, 26.274, 35.355, 48.00),
    ("41", 0.44682, 0.36993, 18.419, 50, 23.657, 26.274, 35.355, 48.00),
    ("42", 0.41032, 0.36214, 48.278, 75, 23.657, 26.274, 35.355, 48.00),
    ("43", 0.50874, 0.33341, 18.419, 50, 48.623, 27.583, 55.902, 29.566),
    ("44", 0.56618, 0.29873, 18.419, 50, 73.589, 28.891, 79.057, 21.435),
    ("45", 0.36753, 0.52508, 18.419, 50, -27.583, 48.623, 55.902, 119.57),
    ("46", 0.35998, 0.47135, 48.278, 75, -27.583, 48.623, 55.902, 119.57),
    ("47", 0.29736, 0.57731, 18.419, 50, -52.548, 47.315, 70.711, 138.00),
    ("48", 0.31049, 0.50294, 48.278, 75, -52.548, 47.315, 70.711, 138.00),
    ("49", 0.43671, 0.47238, 18.419, 50, -2.6168, 49.931, 50, 93.00),
    ("50", 0.4092, 0.43925, 48.278, 75, -2.6168, 49.931, 50, 93.00),
    ("51", 0.50246, 0.42134, 18.419, 50, 22.349, 51.24, 55.902, 66.435),
    ("52", 0.4572, 0.40735, 48.278, 75, 22.349, 51.24, 55.902, 66.435),
    ("53", 0.56315, 0.37345, 18.419, 50, 47.315, 52.548, 70.711, 48.00),
    ("54", 0.61793, 0.32963, 18.419, 50, 72.28, 53.857, 90.139, 36.69),
    ("55", 0.39381, 0.52123, 48.278, 75, -28.891, 73.589, 79.057, 111.43),
    ("56", 0.34264, 0.56147, 48.278, 75, -53.857, 72.28, 90.139, 126.69),
    ("57", 0.44388, 0.48131, 48.278, 75, -3.9252, 74.897, 75, 93.00),
    ("58", 0.49196, 0.4425, 48.278, 75, 21.041, 76.206, 79.057, 74.565),
)

BCP37_WHITE_POINT = (0.312, 0.318, 116.0)

BCP37_ROWS = (
    ("SR", 0.549, 0.313, 22.93, 51.573, 62.234, 32.198, 70.07, 27.356),
    ("LR", 0.407, 0.326, 49.95, 71.596, 31.578, 16.68, 35.713, 27.844),
    ("MR", 0.441, 0.324, 22.93, 51.573, 33.58, 16.981, 37.63, 26.825),
    ("DR", 0.506, 0.311, 7.6, 30.764, 37.017, 16.39, 40.483, 23.882),
    ("SO", 0.513, 0.412, 49.95, 71.596, 31.215, 69.647, 76.322, 65.859),
    ("LO", 0.399, 0.366, 68.56, 81.348, 15.001, 30.172, 33.696, 63.565),
    ("MO", 0.423, 0.375, 34.86, 61.699, 15.94, 30.33, 34.263, 62.275),
    ("DO", 0.481, 0.388, 10.76, 36.51, 18.354, 30.597, 35.679, 59.042),
    ("SY", 0.446, 0.472, 91.25, 91.082, -5.7506, 86.678, 86.868, 93.796),
    ("LY", 0.391, 0.413, 91.25, 91.082, -5.4588, 47.705, 48.016, 96.528),
    ("MY", 0.407, 0.426, 49.95, 71.596, -3.3302, 45.936, 46.057, 94.147),
    ("DY", 0.437, 0.45, 18.43, 46.827, -0.92513, 43.347, 43.357, 91.223),
    ("SH", 0.387, 0.504, 68.56, 81.348, -32.919, 72.055, 79.218, 114.55),
    ("LH", 0.357, 0.42, 79.9, 86.444, -20.62, 40.644, 45.576, 116.9),
    ("MH", 0.36, 0.436, 42.4, 66.939, -19.975, 37.45, 42.444, 118.07),
    ("DH", 0.369, 0.473, 18.43, 46.827, -19.923, 36.863, 41.903, 118.39),
    ("SG", 0.254, 0.449, 42.4, 66.939, -59.948, 24.537, 64.775, 157.74),
    ("LG", 0.288, 0.381, 63.9, 79.091, -34.126, 15.212, 37.363, 155.97),
    ("MG", 0.281, 0.392, 34.86, 61.699, -33.267, 14.065, 36.118, 157.08),
    ("DG", 0.261, 0.419, 12.34, 38.964, -33.292, 12.408, 35.529, 159.56),
    ("SC", 0.226, 0.335, 49.95, 71.596, -44.315, -6.1068, 44.734, 187.85),
    ("LC", 0.267, 0.33, 68.56, 81.348, -26.118, -2.7294, 26.26, 185.97),
    ("MC", 0.254, 0.328, 34.86, 61.699, -25.402, -4.1266, 25.735, 189.23),
    ("DC", 0.233, 0.324, 13.92, 41.216, -24.26, -5.4518, 24.865, 192.67),
    ("SB", 0.2, 0.23, 34.86, 61.699, -13.209, -38.399, 40.608, 251.02),
    ("LB", 0.255, 0.278, 59.25, 76.726, -8.8676, -20.82, 22.63, 246.93),
    ("MB", 0.241, 0.265, 28.9, 56.991, -7.8584, -21.411, 22.807, 249.85),
    ("DB", 0.212, 0.236, 10.76, 36.51, -6.5572, -23.727, 24.616, 254.55),
    ("SP", 0.272, 0.156, 18.43, 46.827, 57.212, -50.49, 76.305, 318.57),
    ("LP", 0.29, 0.242, 49.95, 71.596, 26.028, -27.872, 38.135, 313.04),
    ("MP", 0.287, 0.222, 22.93, 51.573, 28.052, -27.816, 39.505, 315.24),
    ("DP", 0.28, 0.181, 7.6, 30.764, 33.038, -29.66, 44.399, 318.08),
    ("BK", 0.31, 0.316, 0.3, 2.3361, -0.0012256, -0.069311, 0.069322, 268.99),
    ("A1", 0.31, 0.316, 12.34, 38.964, -0.0096122, -0.5405, 0.54058, 268.98),
    ("A2", 0.31, 0.316, 31.88, 59.419, -0.013189, -0.74164, 0.74176, 268.98),
    ("A3", 0.31, 0.316, 63.9, 79.091, -0.01663, -0.93509, 0.93524, 268.98),
    ("WH", 0.31, 0.316, 116, 100.00, -0.020286, -1.1407, 1.1409, 268.98),
)

