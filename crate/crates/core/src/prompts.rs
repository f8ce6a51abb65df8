//! Operator prompt texts. Each prompt has a context-setting half (sent as the
//! system message) and an output directive (sent as the user message).

use serde::{Deserialize, Serialize};

use crate::fitness::ObjectiveKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    InitIntelligent,
    InitBetweennessSpread,
    InitDegreeCentral,
    Crossover,
    MutationRemove,
    MutationAdd,
    MutationOneshot,
}

impl Role {
    pub const INIT_AGENTS: [Role; 3] = [
        Role::InitIntelligent,
        Role::InitBetweennessSpread,
        Role::InitDegreeCentral,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Role::InitIntelligent => "init_intelligent",
            Role::InitBetweennessSpread => "init_betweenness_spread",
            Role::InitDegreeCentral => "init_degree_central",
            Role::Crossover => "crossover",
            Role::MutationRemove => "mutation_remove",
            Role::MutationAdd => "mutation_add",
            Role::MutationOneshot => "mutation_oneshot",
        }
    }

    pub fn is_init(&self) -> bool {
        matches!(
            self,
            Role::InitIntelligent | Role::InitBetweennessSpread | Role::InitDegreeCentral
        )
    }

    pub fn is_mutation(&self) -> bool {
        matches!(self, Role::MutationRemove | Role::MutationAdd | Role::MutationOneshot)
    }

    /// Coarse operator bucket used for latency reports.
    pub fn operator(&self) -> &'static str {
        if self.is_init() {
            "initialization"
        } else if self.is_mutation() {
            "mutation"
        } else {
            "crossover"
        }
    }
}

const INIT_CONTEXT: &str = "You are an expert in network science and will be provided with one network in the form of an image. Please help me intelligently select nodes as the diffusion seeds in this network to achieve influence maximization.";
const INIT_INTELLIGENT: &str = "Only provide a list of node indices separated by commas.";
const INIT_SPREAD: &str = "Here are some tips: (1) Choose large-betweenness nodes. (2) Pick nodes spread across different center parts of the network. Only provide a list of node indices separated by commas.";
const INIT_CENTRAL: &str = "Here are some tips: (1) Choose large-degree nodes. (2) Pick nodes at the center place of the network. Only provide a list of node indices separated by commas.";

const CROSSOVER_CONTEXT: &str = "Examine a network image where seed nodes are distinctly labeled. Carefully analyze the seed nodes present in each network image and suggest an optimal set of seed nodes that harness the advantages of both parent networks to maximize influence spread.";
const CROSSOVER_DIRECTIVE: &str = "Focus on selecting high-degree nodes or nodes in strategic positions that significantly enhance network connectivity. Provide your answer as a list of node indices, separated by commas.";

const REMOVE_CONTEXT: &str = "Examine a network image where seed nodes are colored and non-seed nodes are labeled in white. Identify the current seed node that contributes the least to influence maximization.";
const REMOVE_DIRECTIVE: &str = "Focus on nodes that appear trivial or less connected. Provide the index of this node.";

const ADD_CONTEXT: &str = "Examine a network image where seed nodes are colored and non-seed nodes are labeled in white. Propose a non-seed node that could significantly increase the network's influence spread.";
const ADD_DIRECTIVE: &str = "Focus on nodes with higher degrees or strategically critical positions in the network. Provide the index of this node.";

const ONESHOT_CONTEXT: &str = "Examine a network image where seed nodes are colored and non-seed nodes are labeled in white. Identify the current seed node that contributes the least to influence maximization and propose a non-seed node in white that could significantly increase the network's influence spread.";
const ONESHOT_DIRECTIVE: &str = "Provide the answer as a list: the first element is the index of the seed node to remove, and the second element is the index of the non-seed node to add.";

/// The unmodified (context, directive) pair for a role.
pub fn template(role: Role) -> (&'static str, &'static str) {
    match role {
        Role::InitIntelligent => (INIT_CONTEXT, INIT_INTELLIGENT),
        Role::InitBetweennessSpread => (INIT_CONTEXT, INIT_SPREAD),
        Role::InitDegreeCentral => (INIT_CONTEXT, INIT_CENTRAL),
        Role::Crossover => (CROSSOVER_CONTEXT, CROSSOVER_DIRECTIVE),
        Role::MutationRemove => (REMOVE_CONTEXT, REMOVE_DIRECTIVE),
        Role::MutationAdd => (ADD_CONTEXT, ADD_DIRECTIVE),
        Role::MutationOneshot => (ONESHOT_CONTEXT, ONESHOT_DIRECTIVE),
    }
}

fn retarget(text: &str, objective: ObjectiveKind) -> String {
    match objective {
        ObjectiveKind::Dismantling => text
            .replace(
                "as the diffusion seeds in this network to achieve influence maximization",
                "whose removal dismantles this network into the smallest possible pieces",
            )
            .replace("influence maximization", "network dismantling")
            .replace("the network's influence spread", "the fragmentation of the network")
            .replace("maximize influence spread", "maximize network fragmentation"),
        ObjectiveKind::Edv | ObjectiveKind::IcSpread => text.to_string(),
    }
}

/// Builds the (system, user) prompt pair for one call. List-producing
/// roles get an extra sentence fixing the required length.
pub fn build_prompt(role: Role, objective: ObjectiveKind, k: usize) -> (String, String) {
    let (context, directive) = template(role);
    let system = retarget(context, objective);
    let mut user = retarget(directive, objective);
    if role.is_init() || role == Role::Crossover {
        user.push_str(&format!(" The list must contain exactly {k} distinct node indices."));
    }
    (system, user)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn influence_prompts_are_unmodified() {
        for role in [Role::MutationRemove, Role::MutationAdd, Role::MutationOneshot] {
            let (sys, user) = build_prompt(role, ObjectiveKind::Edv, 5);
            let (c, d) = template(role);
            assert_eq!((sys.as_str(), user.as_str()), (c, d));
        }
        let (_, user) = build_prompt(Role::Crossover, ObjectiveKind::Edv, 5);
        assert!(user.starts_with(CROSSOVER_DIRECTIVE));
        assert!(user.ends_with("exactly 5 distinct node indices."));
    }

    #[test]
    fn dismantling_prompts_drop_influence_wording() {
        for role in [
            Role::InitIntelligent,
            Role::Crossover,
            Role::MutationRemove,
            Role::MutationAdd,
            Role::MutationOneshot,
        ] {
            let (sys, user) = build_prompt(role, ObjectiveKind::Dismantling, 3);
            assert!(!sys.contains("influence"), "{sys}");
            assert!(!user.contains("influence"), "{user}");
        }
    }
}
