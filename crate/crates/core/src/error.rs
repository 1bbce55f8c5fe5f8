use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElectionError {
    #[error("an election needs at least one candidate")]
    NoCandidates,
    #[error("a preference profile needs at least one voter")]
    NoVoters,
    #[error("candidate {candidate} is out of range for {m} candidates")]
    CandidateOutOfRange { candidate: usize, m: usize },
    #[error("candidate {0} appears twice in one order")]
    DuplicateCandidate(usize),
    #[error("voter {voter} ranks {found} candidates, expected {expected}")]
    MismatchedOrder { voter: usize, expected: usize, found: usize },
    #[error("{ballots} ballots for a profile of {voters} voters")]
    BallotCount { ballots: usize, voters: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominanceError {
    #[error("accessible state set has about {estimated} states, above the enumeration budget of {budget}")]
    BudgetExceeded { estimated: u128, budget: u128 },
    #[error("the earth mover distance has no threshold that depends on the winner's score alone")]
    UnsupportedMetric,
    #[error("a biased voter needs a keep radius k greater than r")]
    KeepRadiusTooSmall,
    #[error("a keep radius is only meaningful for truth- or lazy-biased voters")]
    UnexpectedKeepRadius,
    #[error("a step must change the voter's action")]
    NotAStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error("{types} voter types for {voters} voters")]
    TypeCount { types: usize, voters: usize },
    #[error("max_steps must be at least 1")]
    ZeroStepBudget,
    #[error("group cap must be at least 1")]
    ZeroGroupCap,
    #[error("state is not an equilibrium")]
    NotAnEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefGenError {
    #[error("need at least one voter")]
    NoVoters,
    #[error("need at least one candidate")]
    NoCandidates,
    #[error("the riffle model needs at least two candidates")]
    RiffleTooSmall,
    #[error("a {k}-urn needs at least {k} distinct orders, but {m} candidates only have {orders}")]
    UrnTooSmall { k: usize, m: usize, orders: u128 },
    #[error("urn size must be 2 or 3, got {0}")]
    UnsupportedUrn(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreflibError {
    #[error("line {line}: malformed line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: order ranks {found} of {expected} candidates")]
    IncompleteOrder { line: usize, expected: usize, found: usize },
    #[error("line {line}: candidate {candidate} appears twice")]
    DuplicateCandidate { line: usize, candidate: usize },
    #[error("line {line}: unknown candidate id {id}")]
    UnknownCandidate { line: usize, id: usize },
    #[error("no preference orders in input")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty list of traces")]
    NoTraces,
    #[error("ground truth covers {found} candidates, profile has {expected}")]
    GroundTruthSize { expected: usize, found: usize },
}
