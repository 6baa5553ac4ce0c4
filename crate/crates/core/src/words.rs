//! Embedded pool of curriculum-style concept names used by the synthetic generator.

pub const WORD_POOL_VERSION: &str = "pool-v1";

pub const WORD_POOL: &[&str] = &[
    // arithmetic and number
    "Place value", "Whole number addition", "Whole number subtraction", "Multiplication facts",
    "Long division", "Remainders", "Prime factorization", "Greatest common divisor",
    "Least common multiple", "Divisibility rules", "Negative numbers", "Absolute value",
    "Order of operations", "Rounding", "Estimation", "Mental arithmetic", "Number line",
    "Fraction equivalence", "Adding fractions", "Multiplying fractions", "Dividing fractions",
    "Mixed numbers", "Decimal notation", "Decimal multiplication", "Percentages",
    "Percent change", "Ratios", "Proportional reasoning", "Unit rates", "Scientific notation",
    "Exponent laws", "Square roots", "Cube roots", "Irrational numbers", "Rational numbers",
    "Integer exponents", "Significant figures", "Modular arithmetic", "Number bases",
    "Binary numbers",
    // algebra
    "Algebraic expressions", "Like terms", "Distributive property", "Linear equations",
    "Two-step equations", "Literal equations", "Linear inequalities", "Compound inequalities",
    "Slope", "Intercepts", "Point-slope form", "Slope-intercept form", "Parallel lines",
    "Perpendicular lines", "Systems of equations", "Substitution method", "Elimination method",
    "Polynomial addition", "Polynomial multiplication", "Factoring trinomials",
    "Difference of squares", "Quadratic equations", "Quadratic formula", "Completing the square",
    "Discriminant", "Vertex form", "Parabolas", "Rational expressions", "Radical equations",
    "Exponential growth", "Exponential decay", "Logarithms", "Logarithm properties",
    "Function notation", "Domain and range", "Inverse functions", "Function composition",
    "Piecewise functions", "Absolute value functions", "Arithmetic sequences",
    "Geometric sequences", "Series summation", "Binomial theorem", "Complex numbers",
    "Matrix multiplication", "Determinants", "Vectors", "Dot product", "Cross product",
    "Eigenvalues",
    // geometry and trigonometry
    "Angle", "Angle bisector", "Complementary angles", "Supplementary angles",
    "Vertical angles", "Triangle congruence", "Triangle similarity", "Pythagorean theorem",
    "Special right triangles", "Polygon interior angles", "Quadrilaterals", "Parallelograms",
    "Trapezoids", "Circle area", "Circumference", "Arc length", "Sector area",
    "Inscribed angles", "Tangent lines", "Chords", "Coordinate geometry", "Distance formula",
    "Midpoint formula", "Transformations", "Reflections", "Rotations", "Translations",
    "Dilations", "Symmetry", "Surface area", "Volume of prisms", "Volume of cylinders",
    "Volume of cones", "Volume of spheres", "Cross sections", "Geometric proofs",
    "Constructions", "Sine ratio", "Cosine ratio", "Tangent ratio", "Unit circle",
    "Radian measure", "Law of sines", "Law of cosines", "Trigonometric identities",
    "Periodic functions", "Polar coordinates",
    // statistics and probability
    "Mean", "Median", "Mode", "Range", "Interquartile range", "Standard deviation",
    "Box plots", "Histograms", "Scatter plots", "Line of best fit", "Correlation",
    "Two-way tables", "Sampling methods", "Sampling bias", "Probability of events",
    "Compound events", "Independent events", "Conditional probability", "Permutations",
    "Combinations", "Expected value", "Binomial distribution", "Normal distribution",
    "Z-scores", "Confidence intervals", "Hypothesis testing", "Bayes rule",
    "Random variables", "Law of large numbers", "Experimental design",
    // calculus
    "Limits", "Continuity", "Derivative definition", "Power rule", "Product rule",
    "Quotient rule", "Chain rule", "Implicit differentiation", "Related rates",
    "Optimization problems", "Curve sketching", "Mean value theorem", "Antiderivatives",
    "Definite integrals", "Riemann sums", "Fundamental theorem of calculus",
    "Integration by substitution", "Integration by parts", "Partial fractions",
    "Improper integrals", "Differential equations", "Separable equations", "Taylor series",
    "Convergence tests", "Parametric curves", "Multivariable functions",
    "Partial derivatives", "Gradient", "Double integrals", "Lagrange multipliers",
    // physics
    "Displacement", "Velocity", "Acceleration", "Projectile motion", "Newton's first law",
    "Newton's second law", "Newton's third law", "Friction", "Free body diagrams",
    "Circular motion", "Universal gravitation", "Work", "Kinetic energy", "Potential energy",
    "Conservation of energy", "Power", "Momentum", "Impulse", "Elastic collisions",
    "Torque", "Rotational inertia", "Angular momentum", "Simple harmonic motion", "Pendulums",
    "Wave speed", "Interference", "Doppler effect", "Sound intensity", "Reflection of light",
    "Refraction", "Lenses", "Mirrors", "Electric charge", "Coulomb's law", "Electric field",
    "Electric potential", "Capacitors", "Ohm's law", "Series circuits", "Parallel circuits",
    "Kirchhoff's rules", "Magnetic fields", "Electromagnetic induction", "Thermal expansion",
    "Heat transfer", "Specific heat", "Ideal gas law", "Entropy", "Photoelectric effect",
    "Nuclear decay",
    // chemistry
    "Atomic structure", "Isotopes", "Electron configuration", "Periodic trends",
    "Ionic bonding", "Covalent bonding", "Lewis structures", "Molecular geometry",
    "Polarity", "Intermolecular forces", "Chemical formulas", "Naming compounds", "The mole",
    "Molar mass", "Balancing equations", "Stoichiometry", "Limiting reagents",
    "Percent yield", "Solutions", "Molarity", "Dilution", "Acids and bases", "pH scale",
    "Titration", "Buffers", "Redox reactions", "Oxidation numbers", "Electrochemical cells",
    "Reaction rates", "Activation energy", "Catalysts", "Chemical equilibrium",
    "Le Chatelier's principle", "Enthalpy", "Hess's law", "Gibbs free energy",
    "Gas pressure", "Phase changes", "Organic functional groups", "Polymers",
    // biology
    "Cell structure", "Cell membrane", "Diffusion", "Osmosis", "Active transport",
    "Enzymes", "Photosynthesis", "Cellular respiration", "Mitosis", "Meiosis",
    "DNA replication", "Transcription", "Translation", "Genetic code", "Mutations",
    "Mendelian inheritance", "Punnett squares", "Sex-linked traits", "Natural selection",
    "Speciation", "Phylogenetic trees", "Ecosystems", "Food webs", "Energy pyramids",
    "Carbon cycle", "Nitrogen cycle", "Population growth", "Homeostasis", "Nervous system",
    "Endocrine system", "Immune response", "Circulatory system", "Respiratory system",
    "Digestive system", "Plant hormones", "Biotechnology", "Viruses", "Bacteria",
    "Classification", "Biodiversity",
    // earth and space
    "Plate tectonics", "Earthquakes", "Volcanoes", "Rock cycle", "Weathering", "Erosion",
    "Soil formation", "Water cycle", "Weather fronts", "Climate zones", "Greenhouse effect",
    "Ocean currents", "Tides", "Moon phases", "Seasons", "Solar system", "Stellar evolution",
    "Galaxies", "Fossils", "Geologic time",
    // language and literature
    "Parts of speech", "Subject-verb agreement", "Verb tenses", "Pronoun reference",
    "Sentence fragments", "Run-on sentences", "Comma usage", "Semicolons", "Apostrophes",
    "Capitalization", "Spelling patterns", "Prefixes", "Suffixes", "Root words", "Synonyms",
    "Antonyms", "Context clues", "Main idea", "Supporting details", "Summarizing",
    "Inference", "Author's purpose", "Point of view", "Theme", "Plot structure",
    "Characterization", "Setting", "Figurative language", "Metaphor", "Simile",
    "Personification", "Irony", "Tone", "Mood", "Poetry meter", "Rhyme scheme",
    "Persuasive writing", "Thesis statements", "Paragraph structure", "Citations",
    "Argument evaluation", "Rhetorical appeals", "Text structure", "Compare and contrast",
    "Cause and effect", "Reading fluency", "Vocabulary acquisition", "Dialogue punctuation",
    "Active voice", "Passive voice",
    // history and social studies
    "Map reading", "Latitude and longitude", "Ancient Egypt", "Ancient Greece",
    "Roman Empire", "Feudalism", "Renaissance", "Reformation", "Age of exploration",
    "Colonization", "Industrial Revolution", "French Revolution", "Enlightenment",
    "Constitutional government", "Separation of powers", "Checks and balances",
    "Bill of rights", "Federalism", "Elections", "Civil rights", "World War One",
    "World War Two", "Cold War", "Decolonization", "Globalization", "Supply and demand",
    "Opportunity cost", "Market structures", "Inflation", "Gross domestic product",
    "Fiscal policy", "Monetary policy", "International trade", "Personal budgeting",
    "Interest rates", "Primary sources", "Historical causation", "Chronology",
    "Cultural diffusion", "Urbanization",
    // computing
    "Variables", "Data types", "Conditionals", "Loops", "Functions and procedures",
    "Recursion", "Arrays", "Linked lists", "Stacks", "Queues", "Hash tables",
    "Binary search", "Sorting algorithms", "Big O notation", "Trees", "Graph traversal",
    "Shortest paths", "Dynamic programming", "Greedy algorithms", "Object-oriented design",
    "Inheritance", "Encapsulation", "Boolean logic", "Logic gates", "Memory hierarchy",
    "Operating systems", "Networking basics", "Encryption", "Databases", "SQL queries",
    "Regular expressions", "Debugging", "Unit testing", "Version control", "Concurrency",
    "Compilers", "Abstraction", "Pseudocode", "Flowcharts", "Algorithm efficiency",
    // music and arts
    "Note values", "Time signatures", "Key signatures", "Major scales", "Minor scales",
    "Intervals", "Chord construction", "Cadences", "Tempo markings", "Dynamics",
    "Color theory", "Perspective drawing", "Composition balance", "Texture", "Contrast",
    // health and physical education
    "Nutrition labels", "Macronutrients", "Vitamins", "Heart rate zones", "Flexibility",
    "Muscular endurance", "Sleep hygiene", "First aid", "Stress management", "Hydration",
];

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn pool_is_large_and_unique() {
        assert!(WORD_POOL.len() >= 480, "{}", WORD_POOL.len());
        let set: BTreeSet<&str> = WORD_POOL.iter().copied().collect();
        assert_eq!(set.len(), WORD_POOL.len());
        assert!(WORD_POOL.iter().all(|w| !w.trim().is_empty()));
    }
}
