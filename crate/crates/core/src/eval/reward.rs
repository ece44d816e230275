//! Execution reward for code generation, plus the line-delimited reward
//! service an external RL trainer can call.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::GenerationTaskInstance;
use crate::sandbox::{judge_solution, JudgeOptions, ResourceLimits, RunnerRegistry};
use crate::translate::extract_code_block;

/// Binary reward plus a human-readable diagnostic. The reward is total:
/// extraction failures and infrastructure errors score 0 and are described
/// in the diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardOutcome {
    pub reward: u8,
    pub diagnostic: String,
}

/// Extract the fenced program from a sampled response and judge it against
/// the instance's tests: reward 1 iff accepted.
pub fn codegen_reward(
    instance: &GenerationTaskInstance,
    generated_response: &str,
    registry: &RunnerRegistry,
    limits: &ResourceLimits,
) -> RewardOutcome {
    let descriptor = instance.target_language.descriptor();
    let code = match extract_code_block(generated_response, &descriptor) {
        Ok(code) => code,
        Err(e) => {
            return RewardOutcome {
                reward: 0,
                diagnostic: format!("extraction failed: {e}"),
            }
        }
    };
    match judge_solution(
        registry,
        &instance.target_language,
        &code,
        &instance.question.tests,
        limits,
        JudgeOptions::default(),
    ) {
        Ok(verdict) if verdict.accepted() => RewardOutcome {
            reward: 1,
            diagnostic: "accepted".to_string(),
        },
        Ok(verdict) => RewardOutcome {
            reward: 0,
            diagnostic: match verdict.overall.first_failing_test() {
                Some(index) => format!("{} at test {index}", verdict.overall.class_name()),
                None => verdict.overall.class_name().to_string(),
            },
        },
        Err(e) => {
            log::warn!(
                "reward judging failed for question {}: {e}",
                instance.question.question_id
            );
            RewardOutcome {
                reward: 0,
                diagnostic: format!("judge error: {e}"),
            }
        }
    }
}

/// Wire request: one JSON object per line.
#[derive(Debug, Serialize, Deserialize)]
pub struct RewardRequest {
    pub question_id: String,
    pub response_text: String,
    pub language: String,
}

/// Wire response: one JSON object per line, in request order.
#[derive(Debug, Serialize, Deserialize)]
pub struct RewardResponse {
    pub reward: u8,
    pub diagnostic: String,
}

/// Line-delimited TCP reward service. Each connection may stream any number
/// of requests; responses come back one line each, in order.
pub struct RewardServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl RewardServer {
    pub fn spawn(
        questions: BTreeMap<String, crate::corpus::QuestionRecord>,
        registry: RunnerRegistry,
        limits: ResourceLimits,
        bind: &str,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = stop.clone();
        let shared = Arc::new((questions, registry, limits));
        let handle = std::thread::spawn(move || {
            while !stop_flag.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let shared = shared.clone();
                        std::thread::spawn(move || {
                            let _ = serve_connection(stream, &shared.0, &shared.1, &shared.2);
                        });
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(std::time::Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(RewardServer {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for RewardServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_connection(
    stream: TcpStream,
    questions: &BTreeMap<String, crate::corpus::QuestionRecord>,
    registry: &RunnerRegistry,
    limits: &ResourceLimits,
) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<RewardRequest>(&line) {
            Err(e) => RewardResponse {
                reward: 0,
                diagnostic: format!("malformed request: {e}"),
            },
            Ok(request) => match questions.get(&request.question_id) {
                None => RewardResponse {
                    reward: 0,
                    diagnostic: format!("unknown question {}", request.question_id),
                },
                Some(question) => {
                    let instance = GenerationTaskInstance {
                        question: question.clone(),
                        target_language: crate::lang::Language::new(&request.language),
                        prompt_template_id: "reward-endpoint".to_string(),
                    };
                    let outcome =
                        codegen_reward(&instance, &request.response_text, registry, limits);
                    RewardResponse {
                        reward: outcome.reward,
                        diagnostic: outcome.diagnostic,
                    }
                }
            },
        };
        let mut line = serde_json::to_string(&response)?;
        line.push('\n');
        writer.write_all(line.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{QuestionRecord, TestCase};
    use crate::lang::Language;

    fn instance() -> GenerationTaskInstance {
        GenerationTaskInstance {
            question: QuestionRecord {
                question_id: "q1".into(),
                source_dataset: "fixture".into(),
                statement: "Print the sum of two integers.".into(),
                tests: vec![
                    TestCase::new("1 2\n", "3"),
                    TestCase::new("4 5\n", "9"),
                    TestCase::new("0 0\n", "0"),
                    TestCase::new("7 8\n", "15"),
                    TestCase::new("2 2\n", "4"),
                ],
                has_visual_input: false,
                has_custom_checker: false,
                uses_stdin_stdout: true,
            },
            target_language: Language::new("python"),
            prompt_template_id: "t1".into(),
        }
    }

    fn fast_limits() -> ResourceLimits {
        ResourceLimits {
            wall_time_secs: 5.0,
            ..ResourceLimits::default()
        }
    }

    #[test]
    fn correct_fenced_solution_scores_one() {
        let registry = RunnerRegistry::builtin().unwrap();
        let response = "Here you go:\n```python\na, b = map(int, input().split())\nprint(a + b)\n```";
        let outcome = codegen_reward(&instance(), response, &registry, &fast_limits());
        assert_eq!(outcome.reward, 1);
        assert_eq!(outcome.diagnostic, "accepted");
    }

    #[test]
    fn missing_fence_scores_zero() {
        let registry = RunnerRegistry::builtin().unwrap();
        let outcome = codegen_reward(&instance(), "no code at all", &registry, &fast_limits());
        assert_eq!(outcome.reward, 0);
        assert!(outcome.diagnostic.contains("extraction failed"));
    }

    #[test]
    fn failing_solution_reports_failing_test() {
        let registry = RunnerRegistry::builtin().unwrap();
        // Wrong on test index 2 (0 + 0 -> prints 1).
        let response =
            "```python\na, b = map(int, input().split())\nprint(a + b if a else a + b + 1)\n```";
        let outcome = codegen_reward(&instance(), response, &registry, &fast_limits());
        assert_eq!(outcome.reward, 0);
        assert_eq!(outcome.diagnostic, "wrong-answer at test 2");
    }

    #[test]
    fn reward_service_roundtrip() {
        let registry = RunnerRegistry::builtin().unwrap();
        let questions: BTreeMap<String, QuestionRecord> =
            [("q1".to_string(), instance().question)].into();
        let server =
            RewardServer::spawn(questions, registry, fast_limits(), "127.0.0.1:0").unwrap();

        let stream = TcpStream::connect(server.addr()).unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut reader = BufReader::new(stream);

        for (response_text, expected_reward) in [
            ("```python\na, b = map(int, input().split())\nprint(a + b)\n```", 1u8),
            ("gibberish", 0u8),
        ] {
            let request = serde_json::to_string(&RewardRequest {
                question_id: "q1".into(),
                response_text: response_text.into(),
                language: "python".into(),
            })
            .unwrap();
            writeln!(writer, "{request}").unwrap();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let reply: RewardResponse = serde_json::from_str(&line).unwrap();
            assert_eq!(reply.reward, expected_reward);
        }

        // Unknown question.
        writeln!(
            writer,
            r#"{{"question_id":"ghost","response_text":"x","language":"python"}}"#
        )
        .unwrap();
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let reply: RewardResponse = serde_json::from_str(&line).unwrap();
        assert_eq!(reply.reward, 0);
        assert!(reply.diagnostic.contains("unknown question"));
    }
}
