package main

import "fmt"

const items = 3

func producer(ch chan int, done chan bool) {
	for i := 0; i < items; i++ {
		ch <- i
	}
	done <- true
}

func consumer(ch chan int, done chan bool) {
	for j := 0; j < items; j++ {
		fmt.Println(<-ch)
	}
	done <- true
}

func main() {
	ch := make(chan int, 2)
	done := make(chan bool)
	go producer(ch, done)
	go consumer(ch, done)
	<-done
	<-done
}
