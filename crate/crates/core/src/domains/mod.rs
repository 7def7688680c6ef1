pub mod csp;
pub mod knapsack;
pub mod partition;
