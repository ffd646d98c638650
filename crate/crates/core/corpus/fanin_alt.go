package main

import "fmt"

func work(out chan int) {
	for {
		out <- 42
	}
}

func fanin(input1, input2, merged chan int) {
	for {
		select {
		case s1 := <-input1:
			merged <- s1
		case s2 := <-input2:
			merged <- s2
		}
	}
}

// The consumer may give up at any point, leaving the producers blocked.
func main() {
	input1 := make(chan int)
	input2 := make(chan int)
	merged := make(chan int)
	go work(input1)
	go work(input2)
	go fanin(input1, input2, merged)
	for {
		select {
		case v := <-merged:
			fmt.Println(v)
		default:
			return
		}
	}
}
