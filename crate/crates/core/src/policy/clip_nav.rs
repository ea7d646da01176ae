use crate::env_graph::{EnvironmentGraph, Episode};
use crate::grounding::{ac_score, kgs, GroundingScorer};
use crate::instruction::DecomposedInstruction;

use super::{
    sgs, AgentState, KgsEntry, PolicyConfig, PolicyError, SgsCheck, StepRecord, StopReason,
    Trajectory,
};

/// One forward decision.
///
/// Grounds the current keyphrase on the four splits. When that score reaches
/// `advance_threshold` and another keyphrase remains, the agent advances and
/// grounds the next keyphrase instead. It then follows the best-scoring split
/// that is not forbidden and shows at least one neighbor, moving to the
/// Euclidean-closest neighbor in it (ties by id). With no such split the
/// returned record has `to == None` and the state is unchanged apart from
/// the keyphrase index.
pub fn step_clip_nav(
    graph: &EnvironmentGraph,
    scorer: &dyn GroundingScorer,
    instruction: &DecomposedInstruction,
    mut state: AgentState,
    cfg: &PolicyConfig,
) -> Result<(AgentState, StepRecord), PolicyError> {
    let keyphrases = &instruction.nc_keyphrases;
    if keyphrases.is_empty() {
        return Err(PolicyError::NoKeyphrases);
    }
    debug_assert!(state.steps_taken < cfg.max_steps, "step budget exhausted");
    let node = graph.viewpoint(&state.current_node)?;

    let mut index = state.keyphrase_index.min(keyphrases.len() - 1);
    let mut result = kgs(scorer, node, &keyphrases[index])?;
    let mut advanced = false;
    if result.kgs >= cfg.advance_threshold && index + 1 < keyphrases.len() {
        index += 1;
        advanced = true;
        result = kgs(scorer, node, &keyphrases[index])?;
    }
    state.keyphrase_index = index;

    let target = result.ranked_splits().into_iter().find_map(|split| {
        if state
            .visited_forbidden
            .contains(&(node.id.clone(), split as u8))
        {
            return None;
        }
        closest_neighbor(graph, &node.splits[split].visible_neighbors, &node.position)
            .map(|to| (split, to))
    });

    let mut record = StepRecord {
        from: node.id.clone(),
        to: None,
        keyphrase: Some(keyphrases[index].clone()),
        keyphrase_index: Some(index),
        kgs: Some(result),
        taken_split: None,
        ac_score: None,
        advanced,
        backtracked: false,
    };
    if let Some((split, to)) = target {
        record.to = Some(to.clone());
        record.taken_split = Some(split as u8);
        state.kgs_history.push(KgsEntry {
            node: node.id.clone(),
            chosen_split: result.chosen_split,
            taken_split: split as u8,
            kgs: result.kgs,
        });
        state.current_node = to.clone();
        state.path.push(to);
        state.steps_taken += 1;
    }
    Ok((state, record))
}

fn closest_neighbor(
    graph: &EnvironmentGraph,
    neighbors: &[String],
    from: &[f64; 3],
) -> Option<String> {
    neighbors
        .iter()
        .map(|id| {
            let pos = &graph.viewpoint(id).expect("validated neighbor").position;
            (crate::env_graph::euclidean(from, pos), id)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, id)| id.clone())
}

pub fn run_clip_nav(
    graph: &EnvironmentGraph,
    scorer: &dyn GroundingScorer,
    episode: &Episode,
    instruction: &DecomposedInstruction,
    cfg: &PolicyConfig,
) -> Result<Trajectory, PolicyError> {
    navigate(graph, scorer, &episode.start, instruction, cfg, false)
}

/// CLIP-Nav with backtracking. After every `window_n` forward moves the mean
/// of the last `window_n` KGS values is compared with `backtrack_threshold`;
/// below it, the agent retraces those moves and forbids the (node, split)
/// choices it made along them.
pub fn run_seq_clip_nav(
    graph: &EnvironmentGraph,
    scorer: &dyn GroundingScorer,
    episode: &Episode,
    instruction: &DecomposedInstruction,
    cfg: &PolicyConfig,
) -> Result<Trajectory, PolicyError> {
    navigate(graph, scorer, &episode.start, instruction, cfg, true)
}

fn navigate(
    graph: &EnvironmentGraph,
    scorer: &dyn GroundingScorer,
    start: &str,
    instruction: &DecomposedInstruction,
    cfg: &PolicyConfig,
    backtracking: bool,
) -> Result<Trajectory, PolicyError> {
    cfg.validate()?;
    graph.index_of(start)?;
    let mut state = AgentState::new(start);
    let mut steps = Vec::new();
    let mut sgs_checks = Vec::new();
    let mut since_check = 0;

    let finish = |state: AgentState, steps, sgs_checks, reason, final_ac| Trajectory {
        nodes: state.path,
        stop_reason: reason,
        steps,
        sgs_checks,
        final_ac_score: final_ac,
    };

    loop {
        let here = graph.viewpoint(&state.current_node)?;
        let ac = ac_score(scorer, here, &instruction.ac_phrase)?;
        if ac >= cfg.stop_threshold {
            return Ok(finish(
                state,
                steps,
                sgs_checks,
                StopReason::AcThreshold,
                Some(ac),
            ));
        }
        if state.steps_taken >= cfg.max_steps {
            return Ok(finish(
                state,
                steps,
                sgs_checks,
                StopReason::MaxSteps,
                Some(ac),
            ));
        }

        let (next, mut record) = step_clip_nav(graph, scorer, instruction, state, cfg)?;
        state = next;
        record.ac_score = Some(ac);
        let moved = record.to.is_some();
        steps.push(record);
        if !moved {
            return Ok(finish(
                state,
                steps,
                sgs_checks,
                StopReason::DeadEnd,
                Some(ac),
            ));
        }

        if !backtracking {
            continue;
        }
        since_check += 1;
        if since_check < cfg.window_n {
            continue;
        }
        since_check = 0;
        let history: Vec<f64> = state.kgs_history.iter().map(|e| e.kgs).collect();
        let score = sgs(&history, cfg.window_n)?;
        let low = score < cfg.backtrack_threshold;
        sgs_checks.push(SgsCheck {
            after_step: state.path.len() - 1,
            sgs: score,
            backtracked: low,
        });
        if !low {
            continue;
        }

        let abandoned = &state.kgs_history[state.kgs_history.len() - cfg.window_n..];
        for entry in abandoned {
            state
                .visited_forbidden
                .insert((entry.node.clone(), entry.taken_split));
        }
        let last = state.path.len() - 1;
        let retrace: Vec<String> = (1..=cfg.window_n)
            .map(|k| state.path[last - k].clone())
            .collect();
        for to in retrace {
            if cfg.count_backtrack_steps && state.steps_taken >= cfg.max_steps {
                return Ok(finish(state, steps, sgs_checks, StopReason::MaxSteps, None));
            }
            steps.push(StepRecord::hop(&state.current_node, &to, true));
            state.current_node = to.clone();
            state.path.push(to);
            if cfg.count_backtrack_steps {
                state.steps_taken += 1;
            }
        }
    }
}
