use crate::frontend::ThreadId;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("sequential run of thread t{} exceeded {cap} node visits", thread.0)]
    AnalysisBudgetExceeded { thread: ThreadId, cap: usize },
    #[error("outer fixpoint did not stabilize within {budget} iterations")]
    OuterBudgetExceeded { budget: u32 },
    #[error("thread t{} needs {count} interference combinations (cap {cap})", thread.0)]
    CombinationBudgetExceeded { thread: ThreadId, count: usize, cap: usize },
}
