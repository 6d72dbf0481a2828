use ugc_contract_core::quality::{build_prompt, FewShotExample, PromptTemplate};
use ugc_contract_core::Error as CoreError;
use ugc_incentive::evaluator::{evaluate_external, EndpointConfig};
use ugc_incentive::stub::{StubEvaluator, StubReply};
use ugc_incentive::HarnessError;

fn endpoint(url: String, retry_count: u32) -> EndpointConfig {
    EndpointConfig { base_url: url, timeout_secs: 5.0, retry_count, ..EndpointConfig::default() }
}

#[test]
fn request_carries_model_prompt_and_key() {
    let stub = StubEvaluator::scripted(vec![StubReply::Text("9".into())]).unwrap();
    let template = PromptTemplate {
        few_shot_examples: vec![FewShotExample { content: "blurry selfie".into(), rating: 2.0 }],
        ..PromptTemplate::default()
    };
    let mut ep = endpoint(stub.url(), 0);
    ep.model = "rater-small".into();
    ep.api_key = Some("k-123".into());
    assert_eq!(evaluate_external("mountain panorama", &template, &ep).unwrap(), 9.0);
    let req = &stub.requests()[0];
    assert_eq!(req.model, "rater-small");
    assert_eq!(req.prompt, build_prompt("mountain panorama", &template).unwrap());
    assert_eq!(req.authorization.as_deref(), Some("Bearer k-123"));
}

#[test]
fn transient_failures_are_retried() {
    let stub = StubEvaluator::scripted(vec![
        StubReply::Status(503, "busy".into()),
        StubReply::Text("thinking...".into()),
        StubReply::Text("Final rating: 4".into()),
    ])
    .unwrap();
    let v = evaluate_external("a cat", &PromptTemplate::default(), &endpoint(stub.url(), 2)).unwrap();
    assert_eq!(v, 4.0);
    assert_eq!(stub.requests().len(), 3);
}

#[test]
fn server_errors_exhaust_into_unavailable() {
    let stub = StubEvaluator::scripted(vec![StubReply::Status(500, "boom".into())]).unwrap();
    let err = evaluate_external("a cat", &PromptTemplate::default(), &endpoint(stub.url(), 1)).unwrap_err();
    match err {
        HarnessError::EvaluatorUnavailable { attempts, cause } => {
            assert_eq!(attempts, 2);
            assert!(cause.contains("500"), "{cause}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let addr = {
        let stub = StubEvaluator::scripted(vec![StubReply::Text("1".into())]).unwrap();
        stub.url()
    };
    let err = evaluate_external("a cat", &PromptTemplate::default(), &endpoint(addr, 0)).unwrap_err();
    assert!(matches!(err, HarnessError::EvaluatorUnavailable { attempts: 1, .. }), "{err:?}");
}

#[test]
fn out_of_scale_is_not_retried() {
    let stub = StubEvaluator::scripted(vec![StubReply::Text("-1".into())]).unwrap();
    let err = evaluate_external("a cat", &PromptTemplate::default(), &endpoint(stub.url(), 3)).unwrap_err();
    assert!(matches!(err, HarnessError::Core(CoreError::OutOfScale { .. })), "{err:?}");
    assert_eq!(stub.requests().len(), 1);
}

#[test]
fn invalid_inputs_fail_before_any_request() {
    let stub = StubEvaluator::scripted(vec![StubReply::Text("5".into())]).unwrap();
    let err = evaluate_external("   ", &PromptTemplate::default(), &endpoint(stub.url(), 0)).unwrap_err();
    assert!(matches!(err, HarnessError::Core(CoreError::EmptyDescriptor)));
    let mut ep = endpoint(stub.url(), 0);
    ep.rating_scale = (10.0, 0.0);
    assert!(evaluate_external("x", &PromptTemplate::default(), &ep).is_err());
    assert!(stub.requests().is_empty());
}

#[test]
fn custom_scale_is_respected() {
    let stub = StubEvaluator::scripted(vec![StubReply::Text("Rating: 87".into())]).unwrap();
    let mut ep = endpoint(stub.url(), 0);
    ep.rating_scale = (0.0, 100.0);
    assert_eq!(evaluate_external("x", &PromptTemplate::default(), &ep).unwrap(), 87.0);
}
